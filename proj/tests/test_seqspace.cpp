#include "doctest.h"

#include "blockrad/counting.hpp"
#include "blockrad/errors.hpp"
#include "blockrad/seqspace.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace blockrad;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE_BEGIN("seqspace");

TEST_CASE("embedding params")
{
    EmbeddingParams par{.s1 = 2.0, .s2 = 0.0, .p1 = 1.0, .p2 = 2.0, .q1 = 1.0, .q2 = 1.0,
                        .dec = BlockDecomposition({2, 2})};
    CHECK(par.delta() == doctest::Approx(2.0 - 4.0 * 0.5));
    CHECK(par.sigma1() == doctest::Approx(2.0 + 1.0 - 2.0));
    CHECK(!par.compact()); // delta = 0
    par.s1 = 3.0;
    CHECK(par.compact());
}

TEST_CASE("bspq norm examples")
{
    BlockDecomposition d22({2, 2});
    SequenceElement lambda{{0, {0, 0}, 1.0}};
    CHECK(bspq_norm(lambda, 0.0, 2.0, 2.0, d22) == doctest::Approx(0.5));

    SequenceElement zero{};
    CHECK(bspq_norm(zero, 0.0, 2.0, 2.0, d22) == 0.0);

    // homogeneity
    SequenceElement scaled = lambda;
    for (auto& e : scaled)
        e.value *= 3.0;
    CHECK(bspq_norm(scaled, 0.5, 1.0, 3.0, d22)
          == doctest::Approx(3.0 * bspq_norm(lambda, 0.5, 1.0, 3.0, d22)));

    CHECK_THROWS_AS(bspq_norm(lambda, 0.0, 0.5, 2.0, d22), input_error);
}

TEST_CASE("bspq norm axioms on random sequences")
{
    BlockDecomposition d23({2, 3});
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> nu(0, 3);
    std::uniform_int_distribution<std::int64_t> idx(-4, 4);
    std::uniform_real_distribution<double> val(-2.0, 2.0);

    for (int trial = 0; trial < 25; ++trial) {
        SequenceElement a, b;
        for (int i = 0; i < 12; ++i) {
            a.push_back({nu(rng), {idx(rng), idx(rng)}, val(rng)});
            b.push_back({nu(rng), {idx(rng), idx(rng)}, val(rng)});
        }
        SequenceElement sum = a;
        sum.insert(sum.end(), b.begin(), b.end());
        for (double p : {1.0, 2.0, kInf})
            for (double q : {1.0, 1.5, kInf}) {
                const double na = bspq_norm(a, 0.25, p, q, d23);
                const double nb = bspq_norm(b, 0.25, p, q, d23);
                const double ns = bspq_norm(sum, 0.25, p, q, d23);
                CHECK(ns <= na + nb + 1e-12 * (na + nb));
            }
    }
}

TEST_CASE("level-0 sequences reduce to the weighted lp norm")
{
    BlockDecomposition d22({2, 2});
    SequenceElement lambda{{0, {0, 0}, 2.0}, {0, {1, -1}, -1.0}, {0, {2, 3}, 0.5}};
    const double p = 1.7;
    double expect = 0.0;
    for (const auto& e : lambda)
        expect += std::pow(std::abs(e.value), p) * cube_weight({0, e.n}, d22);
    expect = std::pow(expect, 1.0 / p);
    CHECK(bspq_norm(lambda, 0.0, p, 3.0, d22) == doctest::Approx(expect));
}

TEST_CASE("tilde weight")
{
    BlockDecomposition d22({2, 2});
    CHECK(tilde_weight(16, d22, 1.0, 2.0) == doctest::Approx(0.25));
    CHECK(tilde_weight(0, d22, 1.0, 2.0) == 1.0);
    CHECK(tilde_weight(1, d22, 1.0, 2.0) == 1.0);
    BlockDecomposition d23({2, 3});
    CHECK(tilde_weight(8, d23, 1.0, 2.0) == doctest::Approx(1.0 / 8.0));
    CHECK_THROWS_AS(tilde_weight(4, d22, 2.0, 1.5), input_error);

    // non-increasing for ell >= 2
    for (std::int64_t l = 2; l < 4096; l *= 2)
        CHECK(tilde_weight(2 * l, d22, 1.0, 2.0) <= tilde_weight(l, d22, 1.0, 2.0) + 1e-15);
}

TEST_CASE("tilde weight tracks the ordered cube weights")
{
    // v_gamma(l) ~ (l log^(1-n) l)^(gamma_1-1), so tilde_weight should stay
    // within constant factors of v_gamma(l)^(1-p2/p1).
    BlockDecomposition d22({2, 2});
    OrderedWeightSequence seq = enumerate_tau(d22, 100000);
    double lo = 1e300, hi = 0.0;
    for (std::int64_t l = 16; l < 100000; l = l * 5 / 4) {
        const double ratio = tilde_weight(l, d22, 1.0, 2.0)
                           / std::pow(seq.values[static_cast<std::size_t>(l)], 1.0 - 2.0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(lo > 0.0);
    CHECK(hi / lo < 16.0);
}

TEST_CASE("kuhn rate")
{
    // sigma_k = k^{-t}, p1=1, p2=inf -> rate k^{-1-t}
    DiagonalOperatorSpec mono = DiagonalOperatorSpec::power_law(1.5, 0.0, 1.0, kInf);
    const KuhnRate kr = kuhn_rate(16, mono);
    CHECK(kr.value == doctest::Approx(std::pow(16.0, -2.5)));
    CHECK(kr.adw_ok);

    // block-radial gamma=(2,2), p1=1, p2=2: rate = (k^-2 log2 k)^(1/2)
    BlockDecomposition d22({2, 2});
    DiagonalOperatorSpec br = DiagonalOperatorSpec::block_radial(d22, 1.0, 2.0);
    for (std::int64_t k : {16, 64, 1024}) {
        const double expect = std::sqrt(std::log2(double(k)) / double(k * k));
        CHECK(kuhn_rate(k, br).value == doctest::Approx(expect).epsilon(1e-12));
    }

    // explicit constant on {1,2}: rate 2^(1/p2-1/p1) sigma_2
    DiagonalOperatorSpec two = DiagonalOperatorSpec::explicit_values({0.7, 0.7}, 1.0, 2.0);
    CHECK(kuhn_rate(2, two).value == doctest::Approx(std::pow(2.0, 0.5 - 1.0) * 0.7));
}

TEST_CASE("kuhn rate log-log slope after removing the log correction")
{
    BlockDecomposition d22({2, 2});
    DiagonalOperatorSpec br = DiagonalOperatorSpec::block_radial(d22, 1.0, 2.0);
    const int n = d22.n();
    const int g1 = d22.gamma()[0];
    const double expo = (1.0 / 1.0 - 1.0 / 2.0);
    const double k_lo = 16.0, k_hi = 16384.0;
    auto corrected = [&](std::int64_t k) {
        const double logfac = std::pow(std::log2(double(k)), (n - 1) * (g1 - 1) * expo);
        return kuhn_rate(k, br).value / logfac;
    };
    const double slope = (std::log(corrected(16384)) - std::log(corrected(16)))
                       / (std::log(k_hi) - std::log(k_lo));
    CHECK(std::abs(slope - (-double(g1) * expo)) < 1e-6);
}

TEST_CASE("adw scan")
{
    DiagonalOperatorSpec flat = DiagonalOperatorSpec::explicit_values({1.0}, 1.0, 2.0);
    const AdwReport bad = check_adw(flat, 1.0, 10000);
    CHECK(!bad.holds);
    CHECK(bad.sup_value == doctest::Approx(10000.0));
    CHECK(bad.arg_k == 1);
    CHECK(bad.arg_n == 10000);

    DiagonalOperatorSpec mono = DiagonalOperatorSpec::power_law(0.8, 0.0, 1.0, 2.0);
    const AdwReport good = check_adw(mono, 0.5, 10000);
    CHECK(good.holds);
    CHECK(good.sup_value == doctest::Approx(1.0));

    BlockDecomposition d22({2, 2});
    DiagonalOperatorSpec br = DiagonalOperatorSpec::block_radial(d22, 1.0, 2.0);
    CHECK(check_adw(br, 0.6, 100000).holds);
}

TEST_CASE("entropy bounds on exactly solvable cases")
{
    // N=1, sigma=1, p1=p2=2: e_k = 2^{-(k-1)}
    DiagonalOperatorSpec one = DiagonalOperatorSpec::explicit_values({1.0}, 2.0, 2.0);
    for (int k : {1, 3, 6}) {
        const double lo = entropy_lower_bound(one, 1, k);
        const double hi = entropy_upper_bound(one, 1, k);
        CHECK(lo == doctest::Approx(std::ldexp(1.0, -(k - 1))));
        CHECK(hi == doctest::Approx(std::ldexp(1.0, -(k - 1))).epsilon(1e-9));
    }

    // k=1: upper bound is the operator norm sigma_1
    DiagonalOperatorSpec two = DiagonalOperatorSpec::explicit_values({0.9, 0.3}, 2.0, 2.0);
    CHECK(entropy_upper_bound(two, 2, 1) == doctest::Approx(0.9));

    // identity on l_p^N at k=1: volume bound gives exactly 1
    DiagonalOperatorSpec idspec = DiagonalOperatorSpec::explicit_values({1.0, 1.0, 1.0}, 2.0, 2.0);
    CHECK(entropy_lower_bound(idspec, 3, 1) == doctest::Approx(1.0));

    // N=2, sigma=(1,1), p=inf, k=3: grid covering of the square by 4 squares
    DiagonalOperatorSpec sq = DiagonalOperatorSpec::explicit_values({1.0, 1.0}, kInf, kInf);
    CHECK(entropy_upper_bound(sq, 2, 3) == doctest::Approx(0.5));

    // D_sigma = diag(1, 1/2), N=2, p1=p2=2, k=2: volume bound = 1/2
    DiagonalOperatorSpec half = DiagonalOperatorSpec::explicit_values({1.0, 0.5}, 2.0, 2.0);
    const double lo = entropy_lower_bound(half, 2, 2);
    CHECK(lo == doctest::Approx(0.5));
    CHECK(lo <= entropy_upper_bound(half, 2, 2) + 1e-12);
}

TEST_CASE("entropy sandwich on randomized specs")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> decay(0.4, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        const double t = decay(rng);
        const double p1 = (trial % 2) ? 1.0 : 2.0;
        const double p2 = (trial % 3) ? 2.0 : kInf;
        if (p1 > p2)
            continue;
        DiagonalOperatorSpec spec = DiagonalOperatorSpec::power_law(t, 0.0, p1, std::max(p1, p2));
        for (int N : {4, 16, 64})
            for (int k : {1, 2, 5, 11, 23}) {
                const double lo = entropy_lower_bound(spec, N, k);
                const double hi = entropy_upper_bound(spec, N, k);
                REQUIRE(lo <= hi * (1.0 + 1e-12));
            }
    }
}

TEST_CASE("embedding rate matches the block-radial diagonal")
{
    EmbeddingParams par{.s1 = 3.0, .s2 = 0.0, .p1 = 1.0, .p2 = 2.0, .q1 = 1.0, .q2 = 1.0,
                        .dec = BlockDecomposition({2, 2})};
    REQUIRE(par.compact());
    DiagonalOperatorSpec br = DiagonalOperatorSpec::block_radial(par.dec, par.p1, par.p2);
    for (std::int64_t k : {2, 16, 300, 8192})
        CHECK(embedding_entropy_rate(par, k) == doctest::Approx(kuhn_rate(k, br).value));
    // independence from the smoothness parameters
    EmbeddingParams par2 = par;
    par2.s1 = 7.5;
    par2.s2 = 1.25;
    CHECK(embedding_entropy_rate(par2, 64) == embedding_entropy_rate(par, 64));

    EmbeddingParams flat = par;
    flat.s1 = 0.0; // delta < 0: not compact
    CHECK_THROWS_AS(embedding_entropy_rate(flat, 16), input_error);
}

TEST_CASE("schutt rate")
{
    CHECK(schutt_rate(16, 16, 1.0, kInf) == doctest::Approx(1.0 / 16.0));
    CHECK(schutt_rate(4, 4, 1.0, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(schutt_rate(4, 4, 2.0, 2.0), input_error);
    CHECK_THROWS_WITH_AS(schutt_rate(3, 8, 1.0, 2.0),
                         doctest::Contains("unsupported regime"), input_error);
}

TEST_SUITE_END();
