#include "blockrad/counting.hpp"
#include "blockrad/errors.hpp"
#include "blockrad/fitting.hpp"
#include "blockrad/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

namespace blockrad {

namespace {

using i128 = __int128;

// floor of the g-th root of v >= 0.
std::int64_t iroot_floor(i128 v, int g)
{
    if (v <= 0)
        return 0;
    if (g == 1)
        return static_cast<std::int64_t>(v);
    std::int64_t r = static_cast<std::int64_t>(std::pow(static_cast<double>(v), 1.0 / g));
    auto pw = [&](std::int64_t b) {
        i128 p = 1;
        for (int i = 0; i < g; ++i)
            p *= b;
        return p;
    };
    while (r > 0 && pw(r) > v)
        --r;
    while (pw(r + 1) <= v)
        ++r;
    return r;
}

std::int64_t iroot_ceil(i128 v, int g)
{
    if (v <= 0)
        return 0;
    std::int64_t f = iroot_floor(v, g);
    i128 p = 1;
    for (int i = 0; i < g; ++i)
        p *= f;
    return (p == v) ? f : f + 1;
}

i128 ipow(std::int64_t b, int g)
{
    i128 p = 1;
    for (int i = 0; i < g; ++i)
        p *= b;
    return p;
}

// Enumeration over the positive quadrant a_i >= 1. The Z^m and N0^m counts
// follow from preimage multiplicities under a_i = max(1,|k_i|): a_i = 1
// arises from k_i in {-1,0,1} (Z) or {0,1} (N0), a_i >= 2 from {-a_i, a_i}
// or {a_i}.
struct ShellAccumulator2 {
    std::int64_t tilde = 0; // k_i >= 1
    std::int64_t n0 = 0;    // k in N_0^m
    std::int64_t z = 0;     // k in Z^m
};

// Recursion over axes m-1..1 (0-based); axis 0 (the smallest gamma, hence the
// widest range) is closed by an integer interval count.
void enumerate_axis2(const std::vector<int>& gamma, int axis, i128 q, i128 p_lo, i128 p_hi,
                     std::int64_t mult_n0, std::int64_t mult_z, std::int64_t& budget,
                     ShellAccumulator2& acc)
{
    if (axis == 0) {
        const int g = gamma[0] - 1;
        const std::int64_t lo = std::max<std::int64_t>(1, iroot_ceil((p_lo + q - 1) / q, g));
        const std::int64_t hi = iroot_floor((p_hi - 1) / q, g);
        if (hi < lo)
            return;
        const std::int64_t total = hi - lo + 1;
        acc.tilde += total;
        if (lo == 1) {
            acc.n0 += mult_n0 * (2 + (total - 1));
            acc.z += mult_z * (3 + 2 * (total - 1));
        } else {
            acc.n0 += mult_n0 * total;
            acc.z += mult_z * 2 * total;
        }
        return;
    }
    const int g = gamma[axis] - 1;
    for (std::int64_t v = 1;; ++v) {
        if (--budget < 0)
            throw resource_error("shell_count: enumeration budget exceeded");
        const i128 f = ipow(v, g);
        if (q * f >= p_hi)
            break;
        enumerate_axis2(gamma, axis - 1, q * f, p_lo, p_hi,
                        mult_n0 * (v == 1 ? 2 : 1), mult_z * (v == 1 ? 3 : 2), budget, acc);
    }
}

std::int64_t largest_feasible_level(const BlockDecomposition& dec, std::int64_t budget)
{
    // Enumeration work is dominated by the range of axis 1 (0-based), which is
    // bounded by 2^((L+1)(d-m)/(gamma_2-1)).
    if (dec.m() < 2)
        return 1000;
    const double per_level = double(dec.d() - dec.m()) / double(dec.gamma()[1] - 1);
    const double Lmax = std::log2(static_cast<double>(budget)) / per_level - 1.0;
    return static_cast<std::int64_t>(std::floor(Lmax));
}

ShellAccumulator2 shell_counts_all(int L, const BlockDecomposition& dec, std::int64_t budget)
{
    if (L < 0)
        throw input_error("shell_count: L must be >= 0");
    const int dm = dec.d() - dec.m();
    if ((static_cast<std::int64_t>(L) + 1) * dm > 120)
        throw resource_error("shell_count: level too large for 128-bit arithmetic");
    const i128 p_lo = i128(1) << (L * dm);
    const i128 p_hi = i128(1) << ((L + 1) * dm);
    ShellAccumulator2 acc;
    std::int64_t budget_left = budget;
    try {
        enumerate_axis2(dec.gamma(), dec.m() - 1, 1, p_lo, p_hi, 1, 1, budget_left, acc);
    } catch (const resource_error&) {
        throw resource_error("shell_count: enumeration budget exceeded; levels 0.."
                             + std::to_string(largest_feasible_level(dec, budget))
                             + " are feasible for this gamma");
    }
    return acc;
}

} // namespace

const char* shell_mode_name(ShellMode mode)
{
    switch (mode) {
    case ShellMode::ZLattice:
        return "Z";
    case ShellMode::N0Lattice:
        return "N0";
    case ShellMode::Volume:
        return "volume";
    }
    return "?";
}

std::int64_t shell_count(int L, const BlockDecomposition& dec, ShellMode mode,
                         std::int64_t budget)
{
    if (mode == ShellMode::Volume)
        throw input_error("shell_count: Volume mode holds real values; use build_census");
    ShellAccumulator2 acc = shell_counts_all(L, dec, budget);
    return mode == ShellMode::ZLattice ? acc.z : acc.tilde;
}

std::int64_t cumulative_count(int L, const BlockDecomposition& dec, ShellMode mode,
                              std::int64_t budget)
{
    if (mode == ShellMode::Volume)
        throw input_error("cumulative_count: lattice modes only");
    if (L < 0)
        throw input_error("cumulative_count: L must be >= 0");
    const int dm = dec.d() - dec.m();
    if ((static_cast<std::int64_t>(L) + 1) * dm > 120)
        throw resource_error("cumulative_count: level too large for 128-bit arithmetic");
    const i128 p_hi = i128(1) << ((L + 1) * dm);
    ShellAccumulator2 acc;
    std::int64_t budget_left = budget;
    try {
        enumerate_axis2(dec.gamma(), dec.m() - 1, 1, 1, p_hi, 1, 1, budget_left, acc);
    } catch (const resource_error&) {
        throw resource_error("cumulative_count: enumeration budget exceeded; levels 0.."
                             + std::to_string(largest_feasible_level(dec, budget))
                             + " are feasible for this gamma");
    }
    return mode == ShellMode::ZLattice ? acc.z : acc.tilde;
}

ShellCensus build_census(const BlockDecomposition& dec, int L_lo, int L_hi, ShellMode mode,
                         std::int64_t budget)
{
    if (L_lo < 0 || L_hi < L_lo)
        throw input_error("build_census: invalid level range");
    ShellCensus census{dec, mode, {}, {}};
    for (int L = L_lo; L <= L_hi; ++L) {
        census.levels.push_back(L);
        if (mode == ShellMode::Volume) {
            const double hi = volume_VmR(std::ldexp(1.0, L + 1), dec);
            const double lo = volume_VmR(std::ldexp(1.0, L), dec);
            census.counts.push_back(hi - lo);
        } else {
            census.counts.push_back(static_cast<double>(shell_count(L, dec, mode, budget)));
        }
    }
    return census;
}

double f_ell(int ell, double r)
{
    if (ell < 1)
        throw input_error("f_ell: ell must be >= 1");
    if (!(r > 1.0))
        throw input_error("f_ell: r must be > 1");
    double fact = 1.0;
    for (int i = 2; i < ell; ++i)
        fact *= i;
    return r * std::pow(std::log(r), ell - 1) / fact;
}

namespace {

double volume_rec(double R, const std::vector<double>& alpha, int ell, double rel_tol)
{
    if (!(R > 1.0))
        return 0.0;
    if (ell == 1)
        return std::pow(R, 1.0 / alpha[0]) - 1.0;
    const double a = alpha[ell - 1];
    // Substitute x = e^u: the integrand spans many decades in x but is tame in
    // u. Inner levels run at a tighter tolerance so their jitter stays below
    // the outer level's convergence test.
    const double u_max = std::log(R) / a;
    const double inner_tol = 0.02 * rel_tol;
    auto f = [&](double u) {
        return volume_rec(R * std::exp(-u * a), alpha, ell - 1, inner_tol) * std::exp(u);
    };
    return adaptive_simpson(f, 0.0, u_max, rel_tol, 48, 4.0 * inner_tol);
}

} // namespace

double volume_VmR(double R, const BlockDecomposition& dec, double rel_tol)
{
    if (!(R > 1.0))
        throw input_error("volume_VmR: R must be > 1");
    return volume_rec(R, dec.alphas(), dec.m(), rel_tol);
}

VolumeSandwich volume_sandwich(double R, const BlockDecomposition& dec)
{
    const std::vector<double>& alpha = dec.alphas();
    const int m = dec.m();
    const int n = dec.n();
    const double a1 = alpha[0];
    const double log2R = std::log2(R);

    // c_n = a1^(1-n) (ln 2)^(n-1) / (n-1)!
    double fact = 1.0;
    for (int i = 2; i <= n - 1; ++i)
        fact *= i;
    const double c_n = std::pow(a1, 1.0 - n) * std::pow(std::log(2.0), n - 1) / fact;

    double tail = 1.0; // prod_{l=n+1..m} a1/(a_l - a1)
    double tail_sum = 0.0;
    for (int l = n; l < m; ++l) {
        tail *= a1 / (alpha[l] - a1);
        tail_sum += alpha[l];
    }

    VolumeSandwich s;
    const double lead = std::pow(R, 1.0 / a1) * std::pow(std::max(log2R, 1e-300), n - 1);
    s.upper = c_n * tail * lead;

    if (n == m) {
        s.lower = 0.5 * c_n * lead;
        s.valid_from_R = std::exp(2.0 * a1 * (m - 1));
        if (m == 1)
            s.valid_from_R = std::pow(2.0, a1);
        return s;
    }

    // Lower route for n < m: restrict each peeled axis to x in [1,2], which
    // shrinks R by at most 2^(sum of peeled alphas), then require the log
    // factor to lose at most half of log2(R).
    const double A = tail_sum;
    const double shrink = std::pow(2.0, -A / a1);
    s.lower = 0.5 * c_n * shrink * std::pow(0.5, n - 1) * lead;
    const double thr_core = std::exp(2.0 * a1 * (n - 1)) * std::pow(2.0, A);
    s.valid_from_R = std::max({std::pow(2.0, 2.0 * A), thr_core, std::pow(2.0, a1)});
    return s;
}

double volume_monte_carlo(double R, const BlockDecomposition& dec, std::int64_t samples,
                          std::uint64_t seed)
{
    if (!(R > 1.0))
        throw input_error("volume_monte_carlo: R must be > 1");
    const std::vector<double>& alpha = dec.alphas();
    const int m = dec.m();
    std::vector<double> hi(m);
    double box = 1.0;
    for (int i = 0; i < m; ++i) {
        hi[i] = std::pow(R, 1.0 / alpha[i]);
        box *= hi[i] - 1.0;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::int64_t hits = 0;
    const double logR = std::log(R);
    for (std::int64_t s = 0; s < samples; ++s) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            const double x = 1.0 + (hi[i] - 1.0) * u(rng);
            acc += alpha[i] * std::log(x);
        }
        if (acc <= logR)
            ++hits;
    }
    return box * static_cast<double>(hits) / static_cast<double>(samples);
}

OrderedWeightSequence enumerate_tau(const BlockDecomposition& dec, std::size_t length)
{
    if (length < 1)
        throw input_error("enumerate_tau: length must be >= 1");
    const int m = dec.m();
    const std::vector<int>& gamma = dec.gamma();

    // Weight of the axis pair k in {a, -1-a}: increasing in a >= 0, so each
    // visited a stands for 2^m sign-expanded lattice points of equal weight.
    auto axis_w = [&](int i, std::int64_t a) { return axis_cube_weight(a, gamma[i]); };

    // Count lattice points with weight <= W (sign expansion included).
    auto count_below = [&](double W) {
        std::int64_t pairs = 0;
        auto rec = [&](auto&& self, int axis, double q) -> void {
            if (axis == 0) {
                const double limit = W / q;
                if (axis_w(0, 0) > limit)
                    return;
                std::int64_t lo = 0, hic = 1;
                while (axis_w(0, hic) <= limit)
                    hic *= 2;
                while (lo < hic) {
                    const std::int64_t mid = lo + (hic - lo + 1) / 2;
                    if (axis_w(0, mid) <= limit)
                        lo = mid;
                    else
                        hic = mid - 1;
                }
                pairs += lo + 1;
                return;
            }
            for (std::int64_t v = 0;; ++v) {
                const double f = axis_w(axis, v);
                if (q * f * axis_w(0, 0) > W)
                    break;
                self(self, axis - 1, q * f);
            }
        };
        rec(rec, m - 1, 1.0);
        return pairs * (std::int64_t(1) << m);
    };

    // Find a threshold enclosing `length` points.
    double W = 1.0;
    while (count_below(W) < static_cast<std::int64_t>(length)) {
        W *= 2.0;
        if (W > 1e300)
            throw numerical_error("enumerate_tau: threshold search diverged");
    }

    struct Entry {
        double value;
        std::vector<std::int64_t> k;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(count_below(W)) + 16);

    std::vector<std::int64_t> a(m, 0);
    auto emit = [&](auto&& self, int axis, double q) -> void {
        if (axis == m) {
            // expand signs: k_i in {a_i, -1-a_i}
            std::vector<std::int64_t> k(m);
            for (int mask = 0; mask < (1 << m); ++mask) {
                for (int i = 0; i < m; ++i)
                    k[i] = ((mask >> i) & 1) ? (-1 - a[i]) : a[i];
                entries.push_back({q, k});
            }
            return;
        }
        for (std::int64_t v = 0;; ++v) {
            const double f = axis_w(axis, v);
            if (q * f > W)
                break;
            a[axis] = v;
            self(self, axis + 1, q * f);
        }
    };
    emit(emit, 0, 1.0);

    std::sort(entries.begin(), entries.end(), [](const Entry& lhs, const Entry& rhs) {
        if (lhs.value != rhs.value)
            return lhs.value < rhs.value;
        return lhs.k < rhs.k;
    });
    if (entries.size() < length)
        throw numerical_error("enumerate_tau: enumeration shorter than requested length");

    OrderedWeightSequence seq{dec, {}, {}};
    seq.values.reserve(length);
    seq.index_map.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        seq.values.push_back(entries[i].value);
        seq.index_map.push_back(entries[i].k);
    }
    return seq;
}

std::int64_t orbit_count(int j, const std::vector<std::int64_t>& k_tilde,
                         const BlockDecomposition& dec)
{
    if (j < 0)
        throw input_error("orbit_count: j must be >= 0");
    if (static_cast<int>(k_tilde.size()) != dec.m())
        throw input_error("orbit_count: k_tilde dimension mismatch");
    i128 prod = 1;
    for (int i = 0; i < dec.m(); ++i) {
        const std::int64_t k = k_tilde[i];
        if (k < 0)
            throw input_error("orbit_count: entries must be nonnegative");
        if (k == 0)
            continue;
        for (int e = 0; e < dec.gamma()[i] - 1; ++e) {
            prod *= k;
            if (prod > i128(INT64_MAX))
                throw input_error("orbit_count: result exceeds 64-bit range");
        }
    }
    return static_cast<std::int64_t>(prod);
}

ShellFit fit_shell_exponent(const ShellCensus& census, bool cumulative)
{
    std::vector<double> x, y;
    double running = 0.0;
    for (std::size_t i = 0; i < census.levels.size(); ++i) {
        running += census.counts[i];
        const double c = cumulative ? running : census.counts[i];
        if (c > 0.0) {
            x.push_back(static_cast<double>(census.levels[i]));
            y.push_back(std::log2(c));
        }
    }
    if (x.size() < 4)
        throw input_error("fit_shell_exponent: need >= 4 levels with nonzero counts");

    ShellFit fit;
    fit.theoretical_slope = 1.0 / census.dec.alphas()[0];
    const LinearFit plain = ols_fit(x, y);
    fit.slope = plain.slope;

    const int n = census.dec.n();
    if (n >= 2) {
        std::vector<double> z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            z[i] = (n - 1) * std::log2(x[i]);
        const TwoRegressorFit both = ols_fit2(x, z, y);
        fit.slope_corrected = both.coef_x;
        fit.log_correction_gain =
            plain.residual_variance > 0.0
                ? 1.0 - both.residual_variance / plain.residual_variance
                : 0.0;
    } else {
        fit.slope_corrected = plain.slope;
        fit.log_correction_gain = 0.0;
    }
    return fit;
}

void write_census_csv(const ShellCensus& census, std::ostream& os)
{
    os << "L,count,mode,gamma\n";
    std::string gamma_str;
    for (std::size_t i = 0; i < census.dec.gamma().size(); ++i) {
        if (i)
            gamma_str += ' ';
        gamma_str += std::to_string(census.dec.gamma()[i]);
    }
    char buf[64];
    for (std::size_t i = 0; i < census.levels.size(); ++i) {
        if (census.mode == ShellMode::Volume)
            std::snprintf(buf, sizeof(buf), "%.17g", census.counts[i]);
        else
            std::snprintf(buf, sizeof(buf), "%.0f", census.counts[i]);
        os << census.levels[i] << ',' << buf << ',' << shell_mode_name(census.mode) << ','
           << gamma_str << '\n';
    }
}

} // namespace blockrad
