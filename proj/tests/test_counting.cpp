#include "doctest.h"

#include "blockrad/counting.hpp"
#include "blockrad/errors.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

using namespace blockrad;

TEST_SUITE_BEGIN("counting");

namespace {

// Brute-force shell census over an explicit box, for small levels only.
std::int64_t brute_shell(int L, const BlockDecomposition& dec, bool positive_only,
                         bool n0_box = false)
{
    const int m = dec.m();
    const std::vector<int>& gamma = dec.gamma();
    const int dm = dec.d() - m;
    const __int128 p_lo = __int128(1) << (L * dm);
    const __int128 p_hi = __int128(1) << ((L + 1) * dm);
    const std::int64_t bound = 1 << std::min(20, (L + 2) * dm);
    std::int64_t count = 0;
    std::vector<std::int64_t> k(m, 0);
    auto rec = [&](auto&& self, int axis) -> void {
        if (axis == m) {
            __int128 prod = 1;
            for (int i = 0; i < m; ++i) {
                const std::int64_t base = std::max<std::int64_t>(1, std::abs(k[i]));
                for (int e = 0; e < gamma[i] - 1; ++e)
                    prod *= base;
            }
            if (prod >= p_lo && prod < p_hi)
                ++count;
            return;
        }
        const std::int64_t lo = positive_only ? 1 : (n0_box ? 0 : -bound);
        for (std::int64_t v = lo; v <= bound; ++v) {
            k[axis] = v;
            self(self, axis + 1);
        }
    };
    rec(rec, 0);
    return count;
}

std::int64_t divisor_count(std::int64_t n)
{
    std::int64_t c = 0;
    for (std::int64_t a = 1; a * a <= n; ++a)
        if (n % a == 0)
            c += (a * a == n) ? 1 : 2;
    return c;
}

} // namespace

TEST_CASE("shell counts against divisor sums and brute force")
{
    BlockDecomposition d22({2, 2});
    // L=1, k_i >= 1: #{k1 k2 in [4,16)} = sum_{N=4}^{15} d(N) = 40
    std::int64_t expect = 0;
    for (std::int64_t n = 4; n <= 15; ++n)
        expect += divisor_count(n);
    CHECK(expect == 40);
    CHECK(shell_count(1, d22, ShellMode::N0Lattice) == 40);

    // L=0: pairs (1,1),(1,2),(2,1),(1,3),(3,1)
    CHECK(shell_count(0, d22, ShellMode::N0Lattice) == 5);

    // gamma=(2,3) cross-checked against brute-force enumeration
    BlockDecomposition d23({2, 3});
    for (int L = 0; L <= 2; ++L) {
        CHECK(shell_count(L, d23, ShellMode::N0Lattice) == brute_shell(L, d23, true));
        CHECK(shell_count(L, d23, ShellMode::ZLattice) == brute_shell(L, d23, false));
    }
    for (int L = 0; L <= 3; ++L)
        CHECK(shell_count(L, d22, ShellMode::ZLattice) == brute_shell(L, d22, false));
}

TEST_CASE("factor-2^m sandwich between N0 box and positive counts")
{
    BlockDecomposition d22({2, 2});
    for (int L = 0; L <= 4; ++L) {
        const std::int64_t tilde = shell_count(L, d22, ShellMode::N0Lattice);
        const std::int64_t n0_box = brute_shell(L, d22, false, true);
        CHECK(tilde <= n0_box);
        CHECK(n0_box <= 4 * tilde);
    }
}

TEST_CASE("budget errors instead of silent zero")
{
    BlockDecomposition d22({2, 2});
    CHECK_THROWS_AS(shell_count(8, d22, ShellMode::N0Lattice, 10), resource_error);
    try {
        shell_count(8, d22, ShellMode::N0Lattice, 10);
    } catch (const resource_error& e) {
        CHECK(std::string(e.what()).find("levels 0..") != std::string::npos);
    }
}

TEST_CASE("cumulative counts match shell sums")
{
    BlockDecomposition d23({2, 3});
    std::int64_t sum = 0;
    for (int L = 0; L <= 4; ++L)
        sum += shell_count(L, d23, ShellMode::N0Lattice);
    // cumulative includes the sub-unit region {prod < 1} too: for k_i >= 1 the
    // only weight-below-1 points have prod max(1,k)^alpha < 2^0, i.e. prod = 1
    // exactly at k = (1,..,1) which lies in shell L=0 already.
    CHECK(cumulative_count(4, d23, ShellMode::N0Lattice) == sum);
}

TEST_CASE("f_ell formula")
{
    CHECK(f_ell(1, 7.0) == doctest::Approx(7.0));
    CHECK(f_ell(2, 4.0) == doctest::Approx(4.0 * std::log(4.0)));
    CHECK(f_ell(3, std::exp(2.0)) == doctest::Approx(2.0 * std::exp(2.0)));
    CHECK_THROWS_AS(f_ell(2, 1.0), input_error);
    CHECK_THROWS_AS(f_ell(0, 2.0), input_error);
}

TEST_CASE("volume recursion against closed forms")
{
    // m=2, alpha=(1/2,1/2) (gamma=(2,2)): vol = r ln r - r + 1 at r = R^2
    BlockDecomposition d22({2, 2});
    const double v = volume_VmR(2.0, d22);
    CHECK(v == doctest::Approx(4.0 * std::log(4.0) - 3.0).epsilon(1e-7));
    // analytic envelope at r = 4: [f_2(4) - f_1(4), f_2(4)]
    CHECK(v >= f_ell(2, 4.0) - f_ell(1, 4.0));
    CHECK(v <= f_ell(2, 4.0));

    // m=1 base case
    BlockDecomposition d3({3});
    CHECK(volume_VmR(2.0, d3) == doctest::Approx(std::pow(2.0, 1.0 / d3.alphas()[0]) - 1.0));

    // closed form for gamma=(2,3): vol2 = R^3 (1 - X^{-1}) - (X - 1), X = R^{3/2}
    BlockDecomposition d23({2, 3});
    for (double R : {2.0, 8.0, 64.0}) {
        const double X = std::pow(R, 1.5);
        const double expect = std::pow(R, 3.0) * (1.0 - 1.0 / X) - (X - 1.0);
        CHECK(volume_VmR(R, d23) == doctest::Approx(expect).epsilon(1e-7));
    }
}

TEST_CASE("volume sandwich and Monte-Carlo agreement")
{
    for (const std::vector<int>& gamma :
         {std::vector<int>{2, 2}, std::vector<int>{2, 3}, std::vector<int>{2, 2, 2}}) {
        BlockDecomposition dec(gamma);
        for (double R : {8.0, 64.0, 1024.0}) {
            const VolumeSandwich s = volume_sandwich(R, dec);
            if (R < s.valid_from_R)
                continue;
            const double v = volume_VmR(R, dec);
            CHECK(v <= s.upper * (1.0 + 1e-9));
            CHECK(v >= s.lower * (1.0 - 1e-9));
        }
    }
    // Monte-Carlo at moderate R (acceptance fraction large enough for 1e6)
    BlockDecomposition d22({2, 2});
    const double mc = volume_monte_carlo(8.0, d22, 1'000'000, 42);
    CHECK(std::abs(mc - volume_VmR(8.0, d22)) / volume_VmR(8.0, d22) < 0.02);
}

TEST_CASE("ordered weight sequence")
{
    BlockDecomposition d22({2, 2});
    OrderedWeightSequence seq = enumerate_tau(d22, 16);
    // first four values are 1/4 at k in {0,-1}^2
    for (int i = 0; i < 4; ++i) {
        CHECK(seq.values[i] == doctest::Approx(0.25));
        CHECK(seq.index_map[i][0] >= -1);
        CHECK(seq.index_map[i][0] <= 0);
        CHECK(seq.index_map[i][1] >= -1);
        CHECK(seq.index_map[i][1] <= 0);
    }
    // next value is 3/4
    CHECK(seq.values[4] == doctest::Approx(0.75));

    // non-decreasing, and index_map composes back to the values exactly
    for (std::size_t l = 0; l + 1 < seq.values.size(); ++l)
        CHECK(seq.values[l] <= seq.values[l + 1]);
    for (std::size_t l = 0; l < seq.values.size(); ++l) {
        DyadicCube cube{0, seq.index_map[l]};
        CHECK(cube_weight(cube, d22) == doctest::Approx(seq.values[l]).epsilon(1e-14));
    }

    // ties broken lexicographically
    CHECK(seq.index_map[0] < seq.index_map[1]);
    CHECK(seq.index_map[1] < seq.index_map[2]);
    CHECK(seq.index_map[2] < seq.index_map[3]);
}

TEST_CASE("orbit counts")
{
    BlockDecomposition d22({2, 2});
    CHECK(orbit_count(0, {3, 4}, d22) == 12);
    CHECK(orbit_count(3, {0, 0}, d22) == 1);
    BlockDecomposition d23({2, 3});
    CHECK(orbit_count(1, {2, 0}, d23) == 2);
    CHECK_THROWS_AS(orbit_count(0, {-1, 2}, d23), input_error);
}

TEST_CASE("shell exponent fits")
{
    // gamma=(2,3): n=1, per-shell slope 1/alpha_1 = 3, no log correction
    BlockDecomposition d23({2, 3});
    ShellCensus census = build_census(d23, 3, 11, ShellMode::N0Lattice);
    ShellFit fit = fit_shell_exponent(census);
    CHECK(fit.theoretical_slope == doctest::Approx(3.0));
    CHECK(std::abs(fit.slope - 3.0) / 3.0 < 0.05);
    CHECK(fit.log_correction_gain == doctest::Approx(0.0));

    // gamma=(2,2): n=2, corrected slope 2, log regressor helps
    BlockDecomposition d22({2, 2});
    ShellCensus census22 = build_census(d22, 3, 11, ShellMode::N0Lattice);
    ShellFit fit22 = fit_shell_exponent(census22);
    CHECK(fit22.theoretical_slope == doctest::Approx(2.0));
    CHECK(std::abs(fit22.slope_corrected - 2.0) / 2.0 < 0.05);
    CHECK(fit22.log_correction_gain > 0.3);

    // constant census -> slope 0
    ShellCensus flat{d22, ShellMode::N0Lattice, {1, 2, 3, 4, 5}, {7, 7, 7, 7, 7}};
    CHECK(fit_shell_exponent(flat).slope == doctest::Approx(0.0));

    // insufficient data
    ShellCensus tiny{d22, ShellMode::N0Lattice, {1, 2, 3}, {1, 2, 4}};
    CHECK_THROWS_AS(fit_shell_exponent(tiny), input_error);
}

TEST_CASE("volume-mode census tracks the lattice census")
{
    // Continuous shell volumes and lattice shell counts share the growth
    // 2^(L/alpha_1) L^(n-1); their ratio stays within fixed constants.
    BlockDecomposition d22({2, 2});
    ShellCensus lattice = build_census(d22, 4, 9, ShellMode::N0Lattice);
    ShellCensus volume = build_census(d22, 4, 9, ShellMode::Volume);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < lattice.counts.size(); ++i) {
        const double ratio = volume.counts[i] / lattice.counts[i];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(hi / lo < 4.0);
    const ShellFit vf = fit_shell_exponent(volume);
    CHECK(std::abs(vf.slope_corrected - 2.0) / 2.0 < 0.05);
}

TEST_CASE("cumulative fit sees the same exponent")
{
    BlockDecomposition d23({2, 3});
    ShellCensus census = build_census(d23, 3, 11, ShellMode::N0Lattice);
    const ShellFit cum = fit_shell_exponent(census, true);
    CHECK(std::abs(cum.slope - 3.0) / 3.0 < 0.05);
}

TEST_CASE("census csv")
{
    BlockDecomposition d22({2, 2});
    ShellCensus census = build_census(d22, 0, 2, ShellMode::N0Lattice);
    std::ostringstream os;
    write_census_csv(census, os);
    const std::string text = os.str();
    CHECK(text.find("L,count,mode,gamma") == 0);
    CHECK(text.find("0,5,N0,2 2") != std::string::npos);
}

TEST_SUITE_END();
