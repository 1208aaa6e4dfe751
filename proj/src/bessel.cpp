#include "blockrad/bessel.hpp"
#include "blockrad/errors.hpp"

#include <cmath>

namespace blockrad {

namespace {

constexpr double kSeriesSwitch = 14.0;

// Ascending series sum_m (-1)^m (x/2)^(nu+2m) / (m! Gamma(nu+m+1)).
double series_j(double nu, double x)
{
    const long double half = 0.5L * static_cast<long double>(x);
    long double term = std::pow(half, static_cast<long double>(nu))
                     / std::tgamma(static_cast<long double>(nu) + 1.0L);
    long double sum = term;
    const long double h2 = half * half;
    for (int m = 1; m < 400; ++m) {
        term *= -h2 / (static_cast<long double>(m) * (static_cast<long double>(nu) + m));
        sum += term;
        if (std::abs(term) < 1e-22L * std::max<long double>(std::abs(sum), 1e-30L))
            return static_cast<double>(sum);
    }
    throw numerical_error("bessel_j: power series failed to converge");
}

// Hankel's expansion: J_nu(x) = sqrt(2/(pi x)) [cos w P - sin w Q],
// w = x - nu pi/2 - pi/4. Terms a_k = prod_{j<k} (4nu^2-(2j+1)^2) / (k! 8^k).
// The series terminates for half-integer nu; otherwise truncate at the
// smallest term.
double asymptotic_j(double nu, double x)
{
    const long double mu = 4.0L * static_cast<long double>(nu) * nu;
    const long double inv8x = 1.0L / (8.0L * static_cast<long double>(x));
    long double P = 1.0L, Q = 0.0L;
    long double term = 1.0L;
    long double prev_mag = 1e300L;
    for (int k = 1; k <= 40; ++k) {
        const long double odd = 2.0L * k - 1.0L;
        term *= (mu - odd * odd) * inv8x / k;
        if (term == 0.0L)
            break;
        if (std::abs(term) > prev_mag)
            break; // divergence onset: stop at the smallest term
        prev_mag = std::abs(term);
        if (k % 2 == 1)
            Q += (k % 4 == 1) ? term : -term;
        else
            P += (k % 4 == 2) ? -term : term;
        if (std::abs(term) < 1e-19L)
            break;
    }
    const long double w = static_cast<long double>(x)
                        - static_cast<long double>(nu) * M_PIl / 2.0L - M_PIl / 4.0L;
    const long double amp = std::sqrt(2.0L / (M_PIl * static_cast<long double>(x)));
    return static_cast<double>(amp * (std::cos(w) * P - std::sin(w) * Q));
}

} // namespace

double bessel_j(double nu, double x)
{
    if (nu < 0.0)
        throw input_error("bessel_j: nu must be >= 0");
    if (x < 0.0)
        throw input_error("bessel_j: x must be >= 0");
    if (x == 0.0)
        return nu == 0.0 ? 1.0 : 0.0;
    if (x < kSeriesSwitch + nu)
        return series_j(nu, x);
    return asymptotic_j(nu, x);
}

double bessel_j_prime(double nu, double x)
{
    if (x == 0.0) {
        if (nu == 1.0)
            return 0.5;
        return 0.0;
    }
    return (nu / x) * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

double bessel_j_zero(double nu, int k)
{
    if (k < 1)
        throw input_error("bessel_j_zero: k must be >= 1");
    const double mu = 4.0 * nu * nu;
    const double b = (k + 0.5 * nu - 0.25) * M_PI;
    double x = b - (mu - 1.0) / (8.0 * b)
             - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * std::pow(8.0 * b, 3));
    if (x < 0.5)
        x = 0.5;
    for (int it = 0; it < 60; ++it) {
        const double f = bessel_j(nu, x);
        const double df = bessel_j_prime(nu, x);
        if (df == 0.0)
            break;
        const double dx = f / df;
        x -= dx;
        if (std::abs(dx) < 1e-14 * x)
            break;
    }
    return x;
}

} // namespace blockrad
