#ifndef BLOCKRAD_SEQSPACE_HPP
#define BLOCKRAD_SEQSPACE_HPP

#include "blockrad/geometry.hpp"

#include <cstdint>
#include <vector>

namespace blockrad {

// Parameters of the embedding between two weighted sequence spaces.
struct EmbeddingParams {
    double s1 = 0.0, s2 = 0.0;
    double p1 = 1.0, p2 = 2.0;
    double q1 = 1.0, q2 = 1.0;
    BlockDecomposition dec;

    double sigma1() const { return s1 + 0.5 * dec.m() - dec.m() / p1; }
    double sigma2() const { return s2 + 0.5 * dec.m() - dec.m() / p2; }
    double delta() const { return s1 - s2 - dec.d() * (1.0 / p1 - 1.0 / p2); }
    // p1 < p2, delta > 0 and min gamma_i >= 2 (the latter holds by construction).
    bool compact() const { return p1 < p2 && delta() > 0.0; }
};

// Non-increasing multiplier sequence defining D_sigma : l_p1 -> l_p2.
class DiagonalOperatorSpec {
public:
    // sigma_k = k^(-rate) * (log2 max(2,k))^(log_power), k >= 1
    static DiagonalOperatorSpec power_law(double rate, double log_power, double p1, double p2);
    // sigma_k given explicitly (k = 1..values.size())
    static DiagonalOperatorSpec explicit_values(std::vector<double> values, double p1, double p2);
    // sigma_k = tilde-weight(k)^(1/p2) written with the combined finite exponent
    // (gamma_1 - 1)(1/p2 - 1/p1); valid for p2 = inf as well.
    static DiagonalOperatorSpec block_radial(const BlockDecomposition& dec, double p1, double p2);

    double sigma(std::int64_t k) const; // k >= 1
    std::vector<double> materialize(int N) const;
    double p1() const { return p1_; }
    double p2() const { return p2_; }

private:
    enum class Kind { PowerLaw, Explicit, BlockRadial } kind_ = Kind::PowerLaw;
    double rate_ = 0.0, log_power_ = 0.0;
    std::vector<double> values_;
    double exponent_ = 0.0; // block-radial combined exponent
    int n_multiplicity_ = 1;
    double p1_ = 1.0, p2_ = 2.0;
};

struct SequenceEntry {
    int nu = 0;
    std::vector<std::int64_t> n;
    double value = 0.0;
};
using SequenceElement = std::vector<SequenceEntry>;

// ( sum_nu 2^(nu sigma q) ( sum_n |lambda_{nu,n}|^p 2^(m nu) w_gamma(Q_{nu,n}) )^(q/p) )^(1/q)
// with exact cube weights; sup forms for p or q = inf.
double bspq_norm(const SequenceElement& lambda, double sigma, double p, double q,
                 const BlockDecomposition& dec);

// max(1, l * log2(l)^(1-n))^((gamma_1-1)(1 - p2/p1)); value 1 for l in {0,1}.
double tilde_weight(std::int64_t ell, const BlockDecomposition& dec, double p1, double p2);

struct AdwReport {
    bool holds = false;
    double sup_value = 0.0;
    std::int64_t arg_k = 1; // maximizing pair
    std::int64_t arg_n = 1;
};

// Finite-horizon scan of sup_{n>=k} sigma_n/sigma_k (n/k)^alpha. `holds` is the
// heuristic verdict sup <= bound.
AdwReport check_adw(const DiagonalOperatorSpec& spec, double alpha, std::int64_t horizon,
                    double bound = 1e3);

struct KuhnRate {
    double value = 0.0;
    bool adw_ok = false;
    AdwReport adw;
};

// k^(1/p2 - 1/p1) sigma_k, with an (adw) scan attached as a precondition report.
KuhnRate kuhn_rate(std::int64_t k, const DiagonalOperatorSpec& spec);

// Deterministic grid-covering upper bound on e_k of the truncated diagonal
// operator D_sigma : l_p1^N -> l_p2^N.
double entropy_upper_bound(const DiagonalOperatorSpec& spec, int N, int k,
                           int n_cap = 64, int k_cap = 30);

// Volume-comparison lower bound 2^(-(k-1)/N) (vol(D_sigma B_p1^N)/vol(B_p2^N))^(1/N).
double entropy_lower_bound(const DiagonalOperatorSpec& spec, int N, int k);

// k^(-(1/p1 - 1/p2)) in the regime k >= N used by the finite-dimensional
// reduction; other regimes are rejected.
double schutt_rate(std::int64_t k, int N, double p1, double p2);

// Predicted entropy-number decay of the compact embedding described by
// params: (k^(-gamma_1) (log2 k)^((n-1)(gamma_1-1)))^(1/p1-1/p2) for k >= 2.
// Requires params.compact().
double embedding_entropy_rate(const EmbeddingParams& params, std::int64_t k);

// log of the unit-ball volume of l_p^N (p = inf allowed).
double log_ball_volume(int N, double p);

} // namespace blockrad

#endif
