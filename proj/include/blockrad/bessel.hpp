#ifndef BLOCKRAD_BESSEL_HPP
#define BLOCKRAD_BESSEL_HPP

namespace blockrad {

// Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0.
// Power series for small x, Hankel's asymptotic expansion for large x
// (which terminates and is exact for half-integer nu).
double bessel_j(double nu, double x);

// d/dx J_nu(x) = (nu/x) J_nu(x) - J_{nu+1}(x); the x = 0 limit is handled.
double bessel_j_prime(double nu, double x);

// k-th positive zero of J_nu (k >= 1): McMahon start plus Newton refinement.
double bessel_j_zero(double nu, int k);

} // namespace blockrad

#endif
