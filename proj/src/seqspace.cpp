#include "blockrad/seqspace.hpp"
#include "blockrad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace blockrad {

namespace {

bool is_inf(double p)
{
    return std::isinf(p);
}

void require_lebesgue(double p, const char* who)
{
    if (!(p >= 1.0))
        throw input_error(std::string(who) + ": exponent must lie in [1, inf]");
}

} // namespace

DiagonalOperatorSpec DiagonalOperatorSpec::power_law(double rate, double log_power, double p1,
                                                     double p2)
{
    require_lebesgue(p1, "DiagonalOperatorSpec");
    require_lebesgue(p2, "DiagonalOperatorSpec");
    DiagonalOperatorSpec s;
    s.kind_ = Kind::PowerLaw;
    s.rate_ = rate;
    s.log_power_ = log_power;
    s.p1_ = p1;
    s.p2_ = p2;
    return s;
}

DiagonalOperatorSpec DiagonalOperatorSpec::explicit_values(std::vector<double> values, double p1,
                                                           double p2)
{
    require_lebesgue(p1, "DiagonalOperatorSpec");
    require_lebesgue(p2, "DiagonalOperatorSpec");
    if (values.empty())
        throw input_error("DiagonalOperatorSpec: empty sigma");
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i] < values[i + 1])
            throw input_error("DiagonalOperatorSpec: sigma must be non-increasing");
    if (values.back() <= 0.0)
        throw input_error("DiagonalOperatorSpec: sigma must be positive");
    DiagonalOperatorSpec s;
    s.kind_ = Kind::Explicit;
    s.values_ = std::move(values);
    s.p1_ = p1;
    s.p2_ = p2;
    return s;
}

DiagonalOperatorSpec DiagonalOperatorSpec::block_radial(const BlockDecomposition& dec, double p1,
                                                        double p2)
{
    require_lebesgue(p1, "DiagonalOperatorSpec");
    require_lebesgue(p2, "DiagonalOperatorSpec");
    if (!(p1 < p2))
        throw input_error("DiagonalOperatorSpec::block_radial: requires p1 < p2");
    DiagonalOperatorSpec s;
    s.kind_ = Kind::BlockRadial;
    const double inv1 = 1.0 / p1;
    const double inv2 = is_inf(p2) ? 0.0 : 1.0 / p2;
    s.exponent_ = (dec.gamma()[0] - 1) * (inv2 - inv1);
    s.n_multiplicity_ = dec.n();
    s.p1_ = p1;
    s.p2_ = p2;
    return s;
}

double DiagonalOperatorSpec::sigma(std::int64_t k) const
{
    if (k < 1)
        throw input_error("DiagonalOperatorSpec::sigma: k must be >= 1");
    switch (kind_) {
    case Kind::PowerLaw:
        return std::pow(double(k), -rate_) * std::pow(std::log2(std::max<double>(2.0, double(k))), log_power_);
    case Kind::Explicit:
        return k <= static_cast<std::int64_t>(values_.size()) ? values_[k - 1] : values_.back();
    case Kind::BlockRadial: {
        if (k <= 1)
            return 1.0;
        const double body = double(k) * std::pow(std::log2(double(k)), 1.0 - n_multiplicity_);
        return std::pow(std::max(1.0, body), exponent_);
    }
    }
    return 0.0;
}

std::vector<double> DiagonalOperatorSpec::materialize(int N) const
{
    std::vector<double> out(static_cast<std::size_t>(N));
    for (int k = 1; k <= N; ++k)
        out[k - 1] = sigma(k);
    return out;
}

double bspq_norm(const SequenceElement& lambda, double sigma, double p, double q,
                 const BlockDecomposition& dec)
{
    require_lebesgue(p, "bspq_norm");
    require_lebesgue(q, "bspq_norm");
    const int m = dec.m();

    // Group by level.
    std::map<int, double> level_inner; // nu -> inner sum (or sup for p = inf)
    for (const SequenceEntry& e : lambda) {
        if (e.nu < 0)
            throw input_error("bspq_norm: nu must be >= 0");
        if (static_cast<int>(e.n.size()) != m)
            throw input_error("bspq_norm: index dimension mismatch");
        double& slot = level_inner[e.nu];
        if (is_inf(p)) {
            slot = std::max(slot, std::abs(e.value));
        } else {
            DyadicCube cube{e.nu, e.n};
            const double w = cube_weight(cube, dec);
            slot += std::pow(std::abs(e.value), p) * std::ldexp(1.0, m * e.nu) * w;
        }
    }

    if (is_inf(q)) {
        double sup = 0.0;
        for (const auto& [nu, inner] : level_inner) {
            const double lvl = is_inf(p) ? inner : std::pow(inner, 1.0 / p);
            sup = std::max(sup, std::pow(2.0, nu * sigma) * lvl);
        }
        return sup;
    }
    double acc = 0.0;
    for (const auto& [nu, inner] : level_inner) {
        const double lvl = is_inf(p) ? inner : std::pow(inner, 1.0 / p);
        acc += std::pow(std::pow(2.0, nu * sigma) * lvl, q);
    }
    return std::pow(acc, 1.0 / q);
}

double tilde_weight(std::int64_t ell, const BlockDecomposition& dec, double p1, double p2)
{
    require_lebesgue(p1, "tilde_weight");
    require_lebesgue(p2, "tilde_weight");
    if (!(p1 < p2))
        throw input_error("tilde_weight: requires p1 < p2");
    if (is_inf(p2))
        throw input_error("tilde_weight: p2 = inf makes the exponent degenerate; "
                          "use DiagonalOperatorSpec::block_radial");
    if (ell < 0)
        throw input_error("tilde_weight: ell must be >= 0");
    if (ell <= 1)
        return 1.0;
    const int n = dec.n();
    const double body = double(ell) * std::pow(std::log2(double(ell)), 1.0 - n);
    const double expo = (dec.gamma()[0] - 1) * (1.0 - p2 / p1);
    return std::pow(std::max(1.0, body), expo);
}

AdwReport check_adw(const DiagonalOperatorSpec& spec, double alpha, std::int64_t horizon,
                    double bound)
{
    if (horizon < 2)
        throw input_error("check_adw: horizon must be >= 2");
    // sup_{n >= k} sigma_n/sigma_k (n/k)^alpha = max_k suffix_max(a)/a_k with
    // a_n = sigma_n n^alpha.
    std::vector<double> a(static_cast<std::size_t>(horizon));
    for (std::int64_t n = 1; n <= horizon; ++n)
        a[n - 1] = spec.sigma(n) * std::pow(double(n), alpha);
    std::vector<double> suffix(a.size());
    std::vector<std::int64_t> arg(a.size());
    suffix.back() = a.back();
    arg.back() = horizon;
    for (std::int64_t i = horizon - 2; i >= 0; --i) {
        if (a[i] >= suffix[i + 1]) {
            suffix[i] = a[i];
            arg[i] = i + 1;
        } else {
            suffix[i] = suffix[i + 1];
            arg[i] = arg[i + 1];
        }
    }
    AdwReport rep;
    rep.sup_value = 0.0;
    for (std::int64_t k = 1; k <= horizon; ++k) {
        const double v = suffix[k - 1] / a[k - 1];
        if (v > rep.sup_value) {
            rep.sup_value = v;
            rep.arg_k = k;
            rep.arg_n = arg[k - 1];
        }
    }
    rep.holds = rep.sup_value <= bound;
    return rep;
}

KuhnRate kuhn_rate(std::int64_t k, const DiagonalOperatorSpec& spec)
{
    if (k < 2)
        throw input_error("kuhn_rate: k must be >= 2");
    KuhnRate out;
    const double inv1 = is_inf(spec.p1()) ? 0.0 : 1.0 / spec.p1();
    const double inv2 = is_inf(spec.p2()) ? 0.0 : 1.0 / spec.p2();
    out.value = std::pow(double(k), inv2 - inv1) * spec.sigma(k);
    // Precondition scan: (adw) for some alpha above max(1/p2-1/p1, 0).
    const double alpha_floor = std::max(inv2 - inv1, 0.0);
    for (double alpha : {alpha_floor + 0.1, alpha_floor + 0.25, alpha_floor + 0.5}) {
        AdwReport rep = check_adw(spec, alpha, 4096);
        if (rep.holds) {
            out.adw_ok = true;
            out.adw = rep;
            break;
        }
        out.adw = rep;
    }
    return out;
}

double log_ball_volume(int N, double p)
{
    if (N < 1)
        throw input_error("log_ball_volume: N must be >= 1");
    require_lebesgue(p, "log_ball_volume");
    if (is_inf(p))
        return N * std::log(2.0);
    return N * std::log(2.0) + N * std::lgamma(1.0 + 1.0 / p) - std::lgamma(1.0 + double(N) / p);
}

double entropy_lower_bound(const DiagonalOperatorSpec& spec, int N, int k)
{
    if (N < 1 || k < 1)
        throw input_error("entropy_lower_bound: need N >= 1, k >= 1");
    double log_sigma = 0.0;
    for (int i = 1; i <= N; ++i)
        log_sigma += std::log(spec.sigma(i));
    const double log_ratio = log_sigma + log_ball_volume(N, spec.p1()) - log_ball_volume(N, spec.p2());
    return std::exp(-(double(k) - 1.0) / N * std::log(2.0) + log_ratio / N);
}

double entropy_upper_bound(const DiagonalOperatorSpec& spec, int N, int k, int n_cap, int k_cap)
{
    if (N < 1 || k < 1)
        throw input_error("entropy_upper_bound: need N >= 1, k >= 1");
    if (N > n_cap || k > k_cap)
        throw resource_error("entropy_upper_bound: truncation caps exceeded");
    if (spec.p1() > spec.p2())
        throw input_error("entropy_upper_bound: requires p1 <= p2");

    const std::vector<double> sigma = spec.materialize(N);
    const double p2 = spec.p2();
    const bool sup_norm = is_inf(p2);
    const std::int64_t budget = std::int64_t(1) << (k - 1);

    auto radius = [&](const std::vector<std::int64_t>& cells, int D) {
        // head error per axis sigma_i / n_i, tail sigma_{D+1}
        double tail = (D < N) ? sigma[D] : 0.0;
        if (sup_norm) {
            double r = tail;
            for (int i = 0; i < D; ++i)
                r = std::max(r, sigma[i] / double(cells[i]));
            return r;
        }
        double acc = (D < N) ? std::pow(tail, p2) : 0.0;
        for (int i = 0; i < D; ++i)
            acc += std::pow(sigma[i] / double(cells[i]), p2);
        return std::pow(acc, 1.0 / p2);
    };

    // D = 0: one ball centred at the origin covers the whole image
    // (operator norm equals sigma_1 for p1 <= p2).
    double best = sigma[0];

    for (int D = 1; D <= N; ++D) {
        // Scalar family n_i = ceil(sigma_i / t); find the smallest feasible t.
        auto budget_of = [&](double t) -> std::int64_t {
            std::int64_t prod = 1;
            for (int i = 0; i < D; ++i) {
                const std::int64_t ni = static_cast<std::int64_t>(std::ceil(sigma[i] / t - 1e-12));
                prod *= std::max<std::int64_t>(1, ni);
                if (prod > budget)
                    return budget + 1;
            }
            return prod;
        };
        double lo = sigma[0] / (double(budget) + 1.0), hi = sigma[0];
        if (budget_of(lo) > budget)
            lo = hi; // even the finest uniform grid does not fit; fall back to t = sigma_1
        for (int it = 0; it < 200 && hi - lo > 1e-14 * sigma[0]; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (budget_of(mid) <= budget)
                hi = mid;
            else
                lo = mid;
        }
        std::vector<std::int64_t> cells(D);
        std::int64_t prod = 1;
        bool ok = true;
        for (int i = 0; i < D; ++i) {
            cells[i] = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(std::ceil(sigma[i] / hi - 1e-12)));
            if (prod > budget / std::max<std::int64_t>(1, cells[i]) + 1) {
                ok = false;
                break;
            }
            prod *= cells[i];
        }
        if (!ok || prod > budget)
            continue;

        // Greedy polish: refine the axis with the largest per-axis error while
        // the budget allows.
        for (int iter = 0; iter < 4096; ++iter) {
            int worst = -1;
            double worst_err = 0.0;
            for (int i = 0; i < D; ++i) {
                const double err = sigma[i] / double(cells[i]);
                if (err > worst_err && prod / cells[i] * (cells[i] + 1) <= budget) {
                    worst_err = err;
                    worst = i;
                }
            }
            if (worst < 0)
                break;
            prod = prod / cells[worst] * (cells[worst] + 1);
            cells[worst] += 1;
        }
        best = std::min(best, radius(cells, D));
    }
    return best;
}

double embedding_entropy_rate(const EmbeddingParams& params, std::int64_t k)
{
    if (!params.compact())
        throw input_error("embedding_entropy_rate: embedding is not compact "
                          "(needs p1 < p2 and delta > 0)");
    if (k < 2)
        throw input_error("embedding_entropy_rate: k must be >= 2");
    const int g1 = params.dec.gamma()[0];
    const int n = params.dec.n();
    const double inv1 = is_inf(params.p1) ? 0.0 : 1.0 / params.p1;
    const double inv2 = is_inf(params.p2) ? 0.0 : 1.0 / params.p2;
    const double body = std::pow(double(k), -double(g1))
                      * std::pow(std::log2(double(k)), double((n - 1) * (g1 - 1)));
    return std::pow(body, inv1 - inv2);
}

double schutt_rate(std::int64_t k, int N, double p1, double p2)
{
    require_lebesgue(p1, "schutt_rate");
    require_lebesgue(p2, "schutt_rate");
    if (!(p1 < p2))
        throw input_error("schutt_rate: requires p1 < p2");
    if (k < N)
        throw input_error("schutt_rate: unsupported regime (implemented for k >= N only)");
    const double inv1 = is_inf(p1) ? 0.0 : 1.0 / p1;
    const double inv2 = is_inf(p2) ? 0.0 : 1.0 / p2;
    return std::pow(double(k), -(inv1 - inv2));
}

} // namespace blockrad
