#include "blockrad/fitting.hpp"
#include "blockrad/errors.hpp"

#include <cmath>
#include <cstddef>

namespace blockrad {

LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n != y.size() || n < 2)
        throw input_error("ols_fit: need >= 2 matching points");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw input_error("ols_fit: degenerate x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit.intercept - fit.slope * x[i];
        rss += r * r;
    }
    fit.residual_variance = rss / n;
    return fit;
}

TwoRegressorFit ols_fit2(const std::vector<double>& x, const std::vector<double>& z,
                         const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n != y.size() || n != z.size() || n < 3)
        throw input_error("ols_fit2: need >= 3 matching points");
    // Normal equations on centred data.
    double mx = 0, mz = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        mz += z[i];
        my += y[i];
    }
    mx /= n;
    mz /= n;
    my /= n;
    double sxx = 0, sxz = 0, szz = 0, sxy = 0, szy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dz = z[i] - mz, dy = y[i] - my;
        sxx += dx * dx;
        sxz += dx * dz;
        szz += dz * dz;
        sxy += dx * dy;
        szy += dz * dy;
    }
    const double det = sxx * szz - sxz * sxz;
    if (std::abs(det) < 1e-14 * std::max(sxx * szz, 1e-300))
        throw input_error("ols_fit2: collinear regressors");
    TwoRegressorFit fit;
    fit.coef_x = (szz * sxy - sxz * szy) / det;
    fit.coef_z = (sxx * szy - sxz * sxy) / det;
    fit.intercept = my - fit.coef_x * mx - fit.coef_z * mz;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit.intercept - fit.coef_x * x[i] - fit.coef_z * z[i];
        rss += r * r;
    }
    fit.residual_variance = rss / n;
    return fit;
}

} // namespace blockrad
