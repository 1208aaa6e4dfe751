#ifndef BLOCKRAD_SPECTRAL_HPP
#define BLOCKRAD_SPECTRAL_HPP

#include "blockrad/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace blockrad {

struct PotentialSpec {
    enum class Kind { Annulus, Sampled };
    Kind kind = Kind::Annulus;

    // Annulus: V = amplitude on A = { rho_i <= r_i <= rho_i + delta_ann }.
    std::vector<double> rho;   // stored block order (ascending gamma)
    double delta_ann = 1.0;
    double amplitude = 1.0;    // normalization constant c; also the floor value
    double epsilon = 1.0;      // floor of V on A (equals amplitude here)

    // Sampled: arbitrary nonnegative block-radial V given on block radii.
    std::function<double(const std::vector<double>&)> sampled;

    double value_at_radii(const std::vector<double>& r) const;
};

struct SchrodingerSpec {
    double s = 3.0;
    double theta = 1.0;
    double beta = 1.0;
    double r_lebesgue = 2.0;
    BlockDecomposition dec;
    PotentialSpec potential;

    // Checks s/d > 1/r and annulus geometry; normalizes the annulus amplitude
    // so that ||V | L_r(R^d)|| = 1.
    void validate_and_normalize();

    static SchrodingerSpec from_json(const std::string& text);
    std::string to_json() const;
};

// Per-axis discrete Hankel-type transform data. F maps weighted samples to
// coefficients in the orthonormal Dirichlet basis
//   u_k(r) = sqrt(2)/(T |J_{nu+1}(j_k)|) r^(-nu) J_nu(j_k r / T),  nu = gamma/2 - 1,
// and F F^T is close to the identity; the max-abs deviation is recorded.
struct ReducedGrid {
    BlockDecomposition dec;
    std::vector<int> nodes_per_axis;
    std::vector<int> modes_per_axis;
    std::vector<double> T;
    std::vector<std::vector<double>> r;   // radial nodes per axis
    std::vector<std::vector<double>> w;   // quadrature weights incl. r^(gamma-1)
    std::vector<std::vector<double>> rho; // frequency nodes j_k / T
    std::vector<Eigen::MatrixXd> F;       // modes x nodes
    double unitarity_residual = 0.0;

    std::size_t total_modes() const;
    std::size_t total_nodes() const;
    // Largest node gap inside [a, b] on the given axis.
    double max_spacing(int axis, double a, double b) const;
};

// Modes per axis as a fraction of quadrature nodes. 0.575 keeps the highest
// retained mode just inside the Gauss-Legendre resolution limit: the
// unitarity residual stays small but still decays visibly under refinement,
// and the leading eigenvalues settle to <1% already at 64 nodes per axis.
inline constexpr double kDefaultModeFraction = 0.575;

ReducedGrid build_grid(const BlockDecomposition& dec, const std::vector<int>& nodes,
                       const std::vector<double>& T,
                       double mode_fraction = kDefaultModeFraction,
                       double residual_bound = 1e-2);

// Default truncation radii T_i = 4 (rho_i + delta_ann).
std::vector<double> default_truncation(const SchrodingerSpec& spec);

// Birman-Schwinger operator in mode space: entries
//   K_kl = (theta+|rho_k|^2)^(-s/4) Vhat_kl (theta+|rho_l|^2)^(-s/4),
// sharing its nonzero spectrum with sqrt(V) (theta-Delta)^(-s/2) sqrt(V) on the
// discretized block-radial space. Symmetric positive semidefinite.
Eigen::MatrixXd assemble_bs_operator(const SchrodingerSpec& spec, const ReducedGrid& grid);

// Eigenvalues in descending order (dense symmetric solve).
std::vector<double> symmetric_eigenvalues_desc(const Eigen::MatrixXd& K);

// #{ k : mu_k >= 1/beta }; eigenvalues exactly at 1/beta count.
int bs_count(const std::vector<double>& mu_desc, double beta);
int bs_count(const SchrodingerSpec& spec, const ReducedGrid& grid);

// Family psi_{j,nu~}(x) = 2^(-j(s-d)/2) prod_i eta_j(r_i(x) - r^(i)_{j,nu_i}),
// eta_j(t) = eta(2^j t), eta a C^order polynomial smoothstep bump equal to 1
// on [delta/4, 3 delta/4] and supported in [0, delta].
struct MaxMinFamily {
    int j = 0;
    int order = 4; // smoothstep order, ceil(s)+1
    double s = 3.0;
    int d = 4;
    double delta_ann = 1.0;
    std::vector<double> rho;

    int per_axis() const { return 1 << j; }
    std::size_t size() const;
    double amplitude() const;
    double radius(int axis, int nu) const;        // r^(i)_{j,nu} = rho_i + nu 2^-j delta
    double eta(double t) const;                   // profile on [0, delta_ann]
    double eta_j(double t) const;                 // eta(2^j t)
    // psi on block radii, nu_tilde flattened row-major (axis 0 slowest).
    double psi(const std::vector<double>& r, std::size_t flat_nu) const;
    std::vector<int> unflatten(std::size_t flat_nu) const;
};

MaxMinFamily build_test_functions(const SchrodingerSpec& spec, int j);

struct PencilMatrices {
    Eigen::MatrixXd A; // (Delta_theta^{s/2} psi, psi')
    Eigen::MatrixXd B; // (V psi, psi')
};

// Grid route: compresses the discretized forms onto the family, so that
// maxmin_negative_count(...) <= bs_count(...) holds exactly on the same grid.
PencilMatrices maxmin_matrices(const SchrodingerSpec& spec, const MaxMinFamily& family,
                               const ReducedGrid& grid);

// Continuum route: quadrature of the exact Sobolev and potential forms, valid
// at any level j; rho_max and points control the frequency quadrature.
PencilMatrices maxmin_matrices_continuum(const SchrodingerSpec& spec, const MaxMinFamily& family,
                                         double rho_max = 0.0, int freq_points = 0);

// Number of negative eigenvalues of A - beta B. Throws numerical_error when B
// is not positive definite within tolerance (family unresolved).
int maxmin_negative_count(const PencilMatrices& pencil, double beta);

struct TestConstants {
    double C1 = 1.0; // (Delta_theta^{s/2} psi, psi) <= C1 prod k_i^(gamma_i-1)
    double C2 = 1.0; // ||psi sqrt(V)|| >= C2 2^(-js/2) (prod k_i^(gamma_i-1))^(1/2)
};

TestConstants fit_test_constants(const SchrodingerSpec& spec, const PencilMatrices& pencil,
                                 const MaxMinFamily& family);

// j = floor( log2(C2^2 beta / C1) / s ), clamped to [0, j_cap].
int select_level(const SchrodingerSpec& spec, double beta, const TestConstants& c, int j_cap);

// Largest j whose bumps are resolved by the grid (>= min_nodes nodes per bump
// on every axis inside the annulus).
int resolvable_level(const SchrodingerSpec& spec, const ReducedGrid& grid, int min_nodes = 4);

struct CarlRow {
    int k = 0;
    double lambda = 0.0;
    double entropy_upper = 0.0;
    double margin = 0.0; // sqrt(2) * bound - |lambda|
};

struct CarlReport {
    bool ok = true;
    std::vector<CarlRow> rows;
};

// |lambda_k| <= sqrt(2) * upper_bound_k for each provided bound.
CarlReport carl_check(const std::vector<double>& eigenvalues_desc,
                      const std::vector<double>& entropy_upper_bounds);

struct ScanRow {
    double beta = 0.0;
    int bs = 0;
    int maxmin = 0;
    int grid_n = 0;
    double residual = 0.0;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    bool convergence_warning = false;
    double convergence_rel_diff = 0.0;
    int maxmin_j_cap = 0;
};

// One eigendecomposition serves every beta; the maxmin column uses the grid
// pencil at the rule-selected level clamped to grid resolution.
ScanResult scan_beta(const SchrodingerSpec& spec, const std::vector<double>& betas,
                     const ReducedGrid& grid, const ReducedGrid* convergence_grid = nullptr);

struct GrowthFit {
    double exponent = 0.0;
    double log_gain = 0.0;
    int points_used = 0;
};

// Log-log slope of count against beta over nonzero counts, plus the residual
// gain from adding the (log2 beta)^((n-1)(gamma_1-1)/gamma_1) regressor.
GrowthFit fit_growth(const std::vector<double>& betas, const std::vector<double>& counts,
                     const BlockDecomposition& dec);

void write_scan_csv(const ScanResult& scan, std::ostream& os);

} // namespace blockrad

#endif
