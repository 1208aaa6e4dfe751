#include "blockrad/gauss.hpp"
#include "blockrad/errors.hpp"

#include <cmath>
#include <limits>

namespace blockrad {

QuadratureRule gauss_legendre(int n)
{
    if (n < 1)
        throw input_error("gauss_legendre: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15)
                break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

QuadratureRule gauss_legendre(int n, double a, double b)
{
    QuadratureRule base = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        base.nodes[i] = mid + hw * base.nodes[i];
        base.weights[i] *= hw;
    }
    return base;
}

QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b)
{
    if (panels < 1)
        throw input_error("composite_gauss_legendre: panels must be >= 1");
    QuadratureRule out;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        QuadratureRule panel = gauss_legendre(order, a + p * h, a + (p + 1) * h);
        out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    return out;
}

namespace {

double simpson(double fa, double fm, double fb, double h)
{
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

struct SimpsonCtx {
    const std::function<double(double)>& f;
    double noise_rel;   // relative noise of f evaluations
    double abs_floor;   // contributions below this are irrelevant to the total
    double width_floor; // minimal subinterval width
    int max_depth;
    bool converged = true;
};

double simpson_rec(SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = ctx.f(lm), frm = ctx.f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    // Refinement below the evaluation noise of f or below the top-level
    // absolute resolution cannot converge and cannot matter.
    const double floor_here = std::max(ctx.noise_rel * (std::abs(left) + std::abs(right)),
                                       ctx.abs_floor);
    if (std::abs(delta) <= std::max(15.0 * tol, floor_here) || (b - a) <= ctx.width_floor)
        return left + right + delta / 15.0;
    if (depth >= ctx.max_depth) {
        ctx.converged = false;
        return left + right + delta / 15.0;
    }
    return simpson_rec(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
         + simpson_rec(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth, double value_noise_rel)
{
    if (!(b > a))
        return 0.0;
    const double noise_rel =
        std::max(value_noise_rel, 50.0 * std::numeric_limits<double>::epsilon());
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    const double whole = simpson(fa, fm, fb, b - a);
    double scale = std::max(std::abs(whole), 1e-300);
    SimpsonCtx ctx{f, noise_rel, 0.0, 1e-13 * (b - a), max_depth};
    ctx.abs_floor = noise_rel * scale;
    double result = simpson_rec(ctx, a, b, fa, fm, fb, whole, rel_tol * scale, 0);
    if (!ctx.converged) {
        // One retry with the achieved estimate as the scale; the first crude
        // 3-point estimate can be far off for concentrated integrands.
        ctx.converged = true;
        scale = std::max(std::abs(result), 1e-300);
        ctx.abs_floor = noise_rel * scale;
        result = simpson_rec(ctx, a, b, fa, fm, fb, whole, rel_tol * scale, 0);
        if (!ctx.converged)
            throw numerical_error(
                "adaptive_simpson: depth limit reached, achieved tolerance worse than requested");
    }
    return result;
}

} // namespace blockrad
