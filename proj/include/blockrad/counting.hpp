#ifndef BLOCKRAD_COUNTING_HPP
#define BLOCKRAD_COUNTING_HPP

#include "blockrad/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace blockrad {

enum class ShellMode {
    ZLattice,  // k in Z^m with 2^L <= prod max(1,|k_i|)^alpha_i < 2^(L+1)
    N0Lattice, // k_i >= 1 variant of the same shell
    Volume,    // continuous volume of the shell between levels L and L+1
};

const char* shell_mode_name(ShellMode mode);

struct ShellCensus {
    BlockDecomposition dec;
    ShellMode mode = ShellMode::ZLattice;
    std::vector<int> levels;
    std::vector<double> counts; // exact integers for lattice modes
};

// Exact lattice count for one shell. The inequality is evaluated in integer
// arithmetic as 2^(L(d-m)) <= prod max(1,|k_i|)^(gamma_i-1) < 2^((L+1)(d-m)).
// `budget` caps the number of visited enumeration nodes.
std::int64_t shell_count(int L, const BlockDecomposition& dec, ShellMode mode,
                         std::int64_t budget = 200'000'000);

// Count of {k : prod max(1,|k_i|)^alpha_i < 2^(L+1)} for the given lattice mode,
// i.e. the union of shells 0..L plus the sub-unit core.
std::int64_t cumulative_count(int L, const BlockDecomposition& dec, ShellMode mode,
                              std::int64_t budget = 200'000'000);

ShellCensus build_census(const BlockDecomposition& dec, int L_lo, int L_hi, ShellMode mode,
                         std::int64_t budget = 200'000'000);

// f_ell(r) = r (ln r)^(ell-1) / (ell-1)!
double f_ell(int ell, double r);

// vol_m { x_i >= 1, prod x_i^alpha_i <= R } by peeling one axis at a time with
// adaptive Simpson quadrature; base case R^(1/alpha_1) - 1.
double volume_VmR(double R, const BlockDecomposition& dec, double rel_tol = 1e-8);

// Two-sided analytic envelope for volume_VmR and the R threshold above which
// it is valid.
struct VolumeSandwich {
    double lower = 0.0;
    double upper = 0.0;
    double valid_from_R = 1.0;
};
VolumeSandwich volume_sandwich(double R, const BlockDecomposition& dec);

// Hit-or-miss Monte-Carlo estimate of the same volume (test oracle and
// consistency check). Deterministic for a fixed seed.
double volume_monte_carlo(double R, const BlockDecomposition& dec, std::int64_t samples,
                          std::uint64_t seed);

struct OrderedWeightSequence {
    BlockDecomposition dec;
    std::vector<double> values;                     // non-decreasing cube weights v_gamma(l)
    std::vector<std::vector<std::int64_t>> index_map; // rank -> lattice point k
};

// First `length` level-0 cube weights over Z^m in non-decreasing order,
// ties broken lexicographically on the lattice point.
OrderedWeightSequence enumerate_tau(const BlockDecomposition& dec, std::size_t length);

// prod_{i: k_i != 0} k_i^(gamma_i - 1); 1 for k = 0.
std::int64_t orbit_count(int j, const std::vector<std::int64_t>& k_tilde,
                         const BlockDecomposition& dec);

struct ShellFit {
    double slope = 0.0;           // log2(count) per level, single regressor
    double slope_corrected = 0.0; // slope with the log2(L^(n-1)) regressor included
    double log_correction_gain = 0.0; // fractional residual-variance reduction
    double theoretical_slope = 0.0;   // 1/alpha_1
};

ShellFit fit_shell_exponent(const ShellCensus& census, bool cumulative = false);

void write_census_csv(const ShellCensus& census, std::ostream& os);

} // namespace blockrad

#endif
