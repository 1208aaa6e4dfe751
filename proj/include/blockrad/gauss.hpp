#ifndef BLOCKRAD_GAUSS_HPP
#define BLOCKRAD_GAUSS_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace blockrad {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1,1].
QuadratureRule gauss_legendre(int n);

// n-point Gauss-Legendre rule mapped to [a,b].
QuadratureRule gauss_legendre(int n, double a, double b);

// Composite rule: `panels` equal subintervals of [a,b], `order` points each.
QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b);

// Adaptive Simpson on [a,b] with relative tolerance `rel_tol`.
// `value_noise_rel` is the relative noise carried by evaluations of f (e.g.
// the tolerance of an inner quadrature); local refinement stops at that floor.
// Throws numerical_error if the depth limit is hit before convergence.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth = 40, double value_noise_rel = 0.0);

} // namespace blockrad

#endif
