#ifndef BLOCKRAD_GEOMETRY_HPP
#define BLOCKRAD_GEOMETRY_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace blockrad {

// Decomposition of R^d into m rotation blocks of dimensions gamma_1 <= ... <= gamma_m.
// Input order is arbitrary; the stored gamma is ascending and `sort_permutation`
// maps user positions to stored positions.
class BlockDecomposition {
public:
    explicit BlockDecomposition(std::vector<int> gamma_user);

    const std::vector<int>& gamma() const { return gamma_; }
    int d() const { return d_; }
    int m() const { return static_cast<int>(gamma_.size()); }
    // Multiplicity of the smallest block dimension.
    int n() const { return n_; }
    // alpha_i = (gamma_i - 1) / (d - m); empty when d == m cannot happen (gamma_i >= 2).
    const std::vector<double>& alphas() const { return alphas_; }
    // sort_permutation()[user_index] = stored index.
    const std::vector<int>& sort_permutation() const { return perm_; }

    std::string to_json() const;
    static BlockDecomposition from_json(const std::string& text);

private:
    std::vector<int> gamma_;
    std::vector<int> perm_;
    std::vector<double> alphas_;
    int d_ = 0;
    int n_ = 0;
};

// Half-open dyadic cube [2^-nu * n_i, 2^-nu * (n_i + 1)) per coordinate.
struct DyadicCube {
    int nu = 0;
    std::vector<std::int64_t> index;

    double side() const;
};

// Euclidean norm of each gamma-block of x (block order = stored ascending order,
// applied after permuting the user layout).
std::vector<double> block_radii(const std::vector<double>& x, const BlockDecomposition& dec);

// prod_i |r_i|^(gamma_i - 1)
double weight_w_gamma(const std::vector<double>& r, const BlockDecomposition& dec);

// Exact value of prod_i int_{2^-nu n_i}^{2^-nu (n_i+1)} |r|^(gamma_i-1) dr
// via the antiderivative sign(r) |r|^gamma_i / gamma_i.
double cube_weight(const DyadicCube& cube, const BlockDecomposition& dec);

// Per-axis weight factor int_{k}^{k+1} |r|^(gamma-1) dr at level 0.
double axis_cube_weight(std::int64_t k, int gamma);

// Samples of a G(gamma)-invariant function on a tensor radial grid in [0,T_i]^m.
// Quadrature weights absorb the factor r^(gamma_i - 1).
struct ReducedFunction {
    BlockDecomposition dec;
    std::vector<std::vector<double>> grid;     // per-axis nodes, strictly increasing, >= 0
    std::vector<std::vector<double>> weights;  // per-axis quadrature weights incl. r^(gamma-1)
    std::vector<double> values;                // row-major tensor over the axis grids

    std::size_t axis_count(int i) const { return grid[static_cast<std::size_t>(i)].size(); }
    std::size_t total_count() const;
    std::size_t flat_index(const std::vector<std::size_t>& idx) const;

    // Value at an arbitrary radius vector by multilinear interpolation;
    // exact at grid nodes, constant extrapolation beyond the last node.
    double interpolate(const std::vector<double>& r) const;
};

// Tensor grid of `points` composite Gauss-Legendre nodes per axis on [0, T_i].
ReducedFunction make_reduced_grid(const BlockDecomposition& dec, const std::vector<double>& T,
                                  int points_per_axis);

// Restriction of an SO(gamma)-invariant f to the block-radial coordinates:
// samples f at (r_1,0,...,0, r_2,0,...,0, ...) over the grid of `out`.
// f receives points in the *user* coordinate layout of dec.
void trace(const std::function<double(const std::vector<double>&)>& f, ReducedFunction& out);

// Pointwise extension: evaluates g at block_radii(x).
double extend(const ReducedFunction& g, const std::vector<double>& x);

// Max deviation of f over random SO(gamma) rotations of the grid sample points.
// A large value indicates f is not block-radial; reported, never thrown.
double invariance_audit(const std::function<double(const std::vector<double>&)>& f,
                        const ReducedFunction& g, std::uint64_t seed, int rotations_per_point = 4);

// ( C_gamma * int |g|^p w_gamma )^(1/p) with C_gamma = prod_i 2 pi^(gamma_i/2) / Gamma(gamma_i/2),
// evaluated with the stored quadrature. p = inf returns the max over samples.
double lp_norm_reduced(const ReducedFunction& g, double p);

// prod_i 2 pi^(gamma_i/2) / Gamma(gamma_i/2)  (product of unit-sphere areas).
double sphere_constant(const BlockDecomposition& dec);

// CSV round trip. Header: `axis_counts, gamma`, then rows i1,...,im,r1,...,rm,value.
// Loading rebuilds quadrature weights by the trapezoid rule with r^(gamma-1) absorbed.
void write_reduced_csv(const ReducedFunction& g, std::ostream& os);
ReducedFunction read_reduced_csv(std::istream& is);

} // namespace blockrad

#endif
