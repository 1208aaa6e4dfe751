#include "blockrad/spectral.hpp"
#include "blockrad/bessel.hpp"
#include "blockrad/errors.hpp"
#include "blockrad/fitting.hpp"
#include "blockrad/gauss.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

namespace blockrad {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Potential and spec
// ---------------------------------------------------------------------------

double PotentialSpec::value_at_radii(const std::vector<double>& r) const
{
    if (kind == Kind::Sampled)
        return sampled(r);
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (r[i] < rho[i] || r[i] > rho[i] + delta_ann)
            return 0.0;
    return amplitude;
}

void SchrodingerSpec::validate_and_normalize()
{
    if (!(s > 0.0))
        throw input_error("SchrodingerSpec: s must be positive");
    if (!(theta > 0.0 && theta <= 1.0))
        throw input_error("SchrodingerSpec: theta must lie in (0,1]");
    if (!(r_lebesgue > 1.0))
        throw input_error("SchrodingerSpec: r must lie in (1,inf)");
    // Boundary s/d = 1/r is admitted: the truncated operator stays compact and
    // the reference configurations use it.
    if (!(s / dec.d() >= 1.0 / r_lebesgue))
        throw input_error("SchrodingerSpec: requires s/d >= 1/r");
    if (potential.kind == PotentialSpec::Kind::Annulus) {
        if (static_cast<int>(potential.rho.size()) != dec.m())
            throw input_error("SchrodingerSpec: annulus rho dimension mismatch");
        for (double p : potential.rho)
            if (!(p >= 1.0))
                throw input_error("SchrodingerSpec: annulus radii must be >= 1");
        if (!(potential.delta_ann > 0.0))
            throw input_error("SchrodingerSpec: annulus width must be positive");
        // ||V|L_r|| = 1 with V = c 1_A: c = |A|^(-1/r).
        double measure = sphere_constant(dec);
        for (int i = 0; i < dec.m(); ++i) {
            const int g = dec.gamma()[i];
            const double a = potential.rho[i];
            const double b = a + potential.delta_ann;
            measure *= (std::pow(b, g) - std::pow(a, g)) / g;
        }
        potential.amplitude = std::pow(measure, -1.0 / r_lebesgue);
        potential.epsilon = potential.amplitude;
    }
}

SchrodingerSpec SchrodingerSpec::from_json(const std::string& text)
{
    json j = json::parse(text);
    if (!j.contains("gamma"))
        throw input_error("SchrodingerSpec: missing gamma");
    SchrodingerSpec spec{.s = j.value("s", 3.0),
                         .theta = j.value("theta", 1.0),
                         .beta = j.value("beta", 1.0),
                         .r_lebesgue = j.value("r", 2.0),
                         .dec = BlockDecomposition(j["gamma"].get<std::vector<int>>()),
                         .potential = {}};
    if (j.contains("potential")) {
        const json& p = j["potential"];
        const std::string kind = p.value("kind", "annulus");
        if (kind != "annulus")
            throw input_error("SchrodingerSpec: only the annulus potential is JSON-loadable");
        spec.potential.kind = PotentialSpec::Kind::Annulus;
        std::vector<double> rho_user = p.value("rho", std::vector<double>{});
        if (static_cast<int>(rho_user.size()) != spec.dec.m())
            throw input_error("SchrodingerSpec: potential rho size mismatch");
        // Align user order with the stored ascending block order.
        spec.potential.rho.assign(rho_user.size(), 0.0);
        for (std::size_t u = 0; u < rho_user.size(); ++u)
            spec.potential.rho[spec.dec.sort_permutation()[u]] = rho_user[u];
        spec.potential.delta_ann = p.value("delta", 1.0);
    } else {
        spec.potential.kind = PotentialSpec::Kind::Annulus;
        spec.potential.rho.assign(spec.dec.m(), 1.5);
        spec.potential.delta_ann = 1.0;
    }
    spec.validate_and_normalize();
    return spec;
}

std::string SchrodingerSpec::to_json() const
{
    json j;
    j["s"] = s;
    j["theta"] = theta;
    j["beta"] = beta;
    j["r"] = r_lebesgue;
    j["gamma"] = dec.gamma();
    if (potential.kind == PotentialSpec::Kind::Annulus) {
        j["potential"] = {{"kind", "annulus"},
                          {"rho", potential.rho},
                          {"delta", potential.delta_ann},
                          {"amplitude", potential.amplitude}};
    } else {
        j["potential"] = {{"kind", "sampled"}};
    }
    return j.dump();
}

// ---------------------------------------------------------------------------
// Grid and transforms
// ---------------------------------------------------------------------------

std::size_t ReducedGrid::total_modes() const
{
    std::size_t n = 1;
    for (int m : modes_per_axis)
        n *= static_cast<std::size_t>(m);
    return n;
}

std::size_t ReducedGrid::total_nodes() const
{
    std::size_t n = 1;
    for (int m : nodes_per_axis)
        n *= static_cast<std::size_t>(m);
    return n;
}

double ReducedGrid::max_spacing(int axis, double a, double b) const
{
    const std::vector<double>& nodes = r[axis];
    double prev = a, gap = 0.0;
    for (double x : nodes) {
        if (x < a)
            continue;
        if (x > b)
            break;
        gap = std::max(gap, x - prev);
        prev = x;
    }
    gap = std::max(gap, b - prev);
    return gap;
}

ReducedGrid build_grid(const BlockDecomposition& dec, const std::vector<int>& nodes,
                       const std::vector<double>& T, double mode_fraction, double residual_bound)
{
    if (static_cast<int>(nodes.size()) != dec.m() || static_cast<int>(T.size()) != dec.m())
        throw input_error("build_grid: per-axis sizes mismatch");
    ReducedGrid grid{dec, nodes, {}, T, {}, {}, {}, {}, 0.0};
    grid.modes_per_axis.resize(dec.m());
    double residual = 0.0;
    for (int i = 0; i < dec.m(); ++i) {
        const int N = nodes[i];
        if (N < 8)
            throw input_error("build_grid: need at least 8 nodes per axis");
        if (!(T[i] > 0.0))
            throw input_error("build_grid: T must be positive");
        const int gi = dec.gamma()[i];
        const double nu = 0.5 * gi - 1.0;
        const int M = std::max(4, static_cast<int>(std::lround(mode_fraction * N)));
        grid.modes_per_axis[i] = M;

        QuadratureRule q = gauss_legendre(N, 0.0, T[i]);
        std::vector<double> wts(q.weights);
        for (int a = 0; a < N; ++a)
            wts[a] *= std::pow(q.nodes[a], gi - 1);

        std::vector<double> freq(M);
        Eigen::MatrixXd F(M, N);
        for (int k = 0; k < M; ++k) {
            const double jk = bessel_j_zero(nu, k + 1);
            freq[k] = jk / T[i];
            const double norm = std::sqrt(2.0) / (T[i] * std::abs(bessel_j(nu + 1.0, jk)));
            for (int a = 0; a < N; ++a) {
                const double u = norm * std::pow(q.nodes[a], -nu) * bessel_j(nu, jk * q.nodes[a] / T[i]);
                F(k, a) = u * std::sqrt(wts[a]);
            }
        }
        const Eigen::MatrixXd G = F * F.transpose() - Eigen::MatrixXd::Identity(M, M);
        residual = std::max(residual, G.cwiseAbs().maxCoeff());

        grid.r.push_back(std::move(q.nodes));
        grid.w.push_back(std::move(wts));
        grid.rho.push_back(std::move(freq));
        grid.F.push_back(std::move(F));
    }
    grid.unitarity_residual = residual;
    if (residual > residual_bound)
        throw numerical_error("build_grid: unitarity residual " + std::to_string(residual)
                              + " above bound " + std::to_string(residual_bound));
    return grid;
}

std::vector<double> default_truncation(const SchrodingerSpec& spec)
{
    std::vector<double> T(static_cast<std::size_t>(spec.dec.m()));
    for (int i = 0; i < spec.dec.m(); ++i)
        T[i] = 4.0 * (spec.potential.rho[i] + spec.potential.delta_ann);
    return T;
}

// ---------------------------------------------------------------------------
// Birman-Schwinger operator
// ---------------------------------------------------------------------------

namespace {

// (theta + |rho_k|^2)^power per tensor mode, row-major (axis 0 slowest).
std::vector<double> mode_multiplier(const ReducedGrid& grid, double theta, double power)
{
    const int m = grid.dec.m();
    const std::size_t total = grid.total_modes();
    std::vector<double> mult(total);
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double s2 = theta;
        for (int i = m - 1; i >= 0; --i) {
            const std::size_t k = rem % grid.modes_per_axis[i];
            rem /= grid.modes_per_axis[i];
            s2 += grid.rho[i][k] * grid.rho[i][k];
        }
        mult[flat] = std::pow(s2, power);
    }
    return mult;
}

std::vector<double> sample_potential(const SchrodingerSpec& spec, const ReducedGrid& grid)
{
    const int m = grid.dec.m();
    const std::size_t total = grid.total_nodes();
    std::vector<double> V(total);
    std::vector<double> r(m);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int i = m - 1; i >= 0; --i) {
            const std::size_t a = rem % grid.nodes_per_axis[i];
            rem /= grid.nodes_per_axis[i];
            r[i] = grid.r[i][a];
        }
        V[flat] = spec.potential.value_at_radii(r);
    }
    return V;
}

// Exact per-axis annulus Gram matrix int_{rho}^{rho+delta} u_k u_l r^(gamma-1) dr.
// Point-sampling the sharp indicator at the grid nodes would leave an O(1/N)
// measure jitter; a dedicated quadrature over the interval is exact and the
// S W S^T form keeps the matrix positive semidefinite.
Eigen::MatrixXd axis_annulus_gram(const SchrodingerSpec& spec, const ReducedGrid& grid, int axis)
{
    const int gi = grid.dec.gamma()[axis];
    const double nu = 0.5 * gi - 1.0;
    const int M = grid.modes_per_axis[axis];
    const double a = spec.potential.rho[axis];
    const double b = a + spec.potential.delta_ann;
    const double T = grid.T[axis];
    const int nq = std::max(96, grid.nodes_per_axis[axis]);
    QuadratureRule q = gauss_legendre(nq, a, b);
    Eigen::MatrixXd S(M, nq);
    for (int k = 0; k < M; ++k) {
        const double jk = grid.rho[axis][k] * T;
        const double norm = std::sqrt(2.0) / (T * std::abs(bessel_j(nu + 1.0, jk)));
        for (int t = 0; t < nq; ++t) {
            const double r = q.nodes[t];
            S(k, t) = norm * std::pow(r, -nu) * bessel_j(nu, jk * r / T)
                    * std::sqrt(q.weights[t] * std::pow(r, gi - 1));
        }
    }
    return S * S.transpose();
}

Eigen::MatrixXd potential_in_modes(const SchrodingerSpec& spec, const ReducedGrid& grid)
{
    const int m = grid.dec.m();

    if (spec.potential.kind == PotentialSpec::Kind::Annulus) {
        // Separable: Vhat = amplitude * (x) axis Gram matrices.
        std::vector<Eigen::MatrixXd> G(m);
        for (int i = 0; i < m; ++i)
            G[i] = axis_annulus_gram(spec, grid, i);
        if (m == 1)
            return spec.potential.amplitude * G[0];
        const std::size_t Mt = grid.total_modes();
        if (Mt > 12000)
            throw resource_error("assemble_bs_operator: mode space too large");
        if (m == 2) {
            const int M1 = grid.modes_per_axis[0], M2 = grid.modes_per_axis[1];
            Eigen::MatrixXd Vhat(Mt, Mt);
            for (int k1 = 0; k1 < M1; ++k1)
                for (int l1 = 0; l1 < M1; ++l1)
                    Vhat.block(k1 * M2, l1 * M2, M2, M2) =
                        (spec.potential.amplitude * G[0](k1, l1)) * G[1];
            return Vhat;
        }
        Eigen::MatrixXd Vhat(Mt, Mt);
        std::vector<std::size_t> ki(m), li(m);
        for (std::size_t k = 0; k < Mt; ++k) {
            std::size_t rem = k;
            for (int i = m - 1; i >= 0; --i) {
                ki[i] = rem % grid.modes_per_axis[i];
                rem /= grid.modes_per_axis[i];
            }
            for (std::size_t l = k; l < Mt; ++l) {
                rem = l;
                for (int i = m - 1; i >= 0; --i) {
                    li[i] = rem % grid.modes_per_axis[i];
                    rem /= grid.modes_per_axis[i];
                }
                double prod = spec.potential.amplitude;
                for (int i = 0; i < m; ++i)
                    prod *= G[i](static_cast<Eigen::Index>(ki[i]), static_cast<Eigen::Index>(li[i]));
                Vhat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = prod;
                Vhat(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = prod;
            }
        }
        return Vhat;
    }

    const std::vector<double> V = sample_potential(spec, grid);

    if (m == 1) {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(V.data(), V.size());
        Eigen::MatrixXd Vhat = grid.F[0] * v.asDiagonal() * grid.F[0].transpose();
        return 0.5 * (Vhat + Vhat.transpose());
    }
    if (m == 2) {
        const int N1 = grid.nodes_per_axis[0], N2 = grid.nodes_per_axis[1];
        const int M1 = grid.modes_per_axis[0], M2 = grid.modes_per_axis[1];
        // WW row a1 holds vec(F2 diag(V[a1,:]) F2^T).
        Eigen::MatrixXd WW(N1, M2 * M2);
        for (int a1 = 0; a1 < N1; ++a1) {
            Eigen::VectorXd row(N2);
            for (int a2 = 0; a2 < N2; ++a2)
                row(a2) = V[static_cast<std::size_t>(a1) * N2 + a2];
            Eigen::MatrixXd W = grid.F[1] * row.asDiagonal() * grid.F[1].transpose();
            W = 0.5 * (W + W.transpose()).eval();
            WW.row(a1) = Eigen::Map<const Eigen::VectorXd>(W.data(), M2 * M2);
        }
        // U[(k1 l1), a1] = F1(k1,a1) F1(l1,a1)
        Eigen::MatrixXd U(M1 * M1, N1);
        for (int k1 = 0; k1 < M1; ++k1)
            for (int l1 = 0; l1 < M1; ++l1)
                U.row(k1 * M1 + l1) =
                    (grid.F[0].row(k1).array() * grid.F[0].row(l1).array()).matrix();
        Eigen::MatrixXd flat = U * WW; // (M1*M1) x (M2*M2), column-major W storage
        Eigen::MatrixXd Vhat(M1 * M2, M1 * M2);
        for (int k1 = 0; k1 < M1; ++k1)
            for (int l1 = 0; l1 < M1; ++l1)
                for (int k2 = 0; k2 < M2; ++k2)
                    for (int l2 = 0; l2 < M2; ++l2)
                        Vhat(k1 * M2 + k2, l1 * M2 + l2) =
                            flat(k1 * M1 + l1, l2 * M2 + k2); // W is column-major: (k2,l2) at l2*M2+k2
        return Vhat;
    }
    // Generic route via the explicit weighted-sample factor, guarded by size.
    const std::size_t Mt = grid.total_modes(), Nt = grid.total_nodes();
    if (Mt * Nt > 40'000'000)
        throw resource_error("assemble_bs_operator: grid too large for the generic m >= 3 route");
    Eigen::MatrixXd B(Mt, Nt);
    std::vector<std::size_t> aidx(m);
    for (std::size_t a = 0; a < Nt; ++a) {
        std::size_t rem = a;
        for (int i = m - 1; i >= 0; --i) {
            aidx[i] = rem % grid.nodes_per_axis[i];
            rem /= grid.nodes_per_axis[i];
        }
        const double sv = std::sqrt(std::max(0.0, V[a]));
        std::vector<std::size_t> kidx(m, 0);
        for (std::size_t k = 0; k < Mt; ++k) {
            std::size_t kr = k;
            double prod = 1.0;
            for (int i = m - 1; i >= 0; --i) {
                const std::size_t ki = kr % grid.modes_per_axis[i];
                kr /= grid.modes_per_axis[i];
                prod *= grid.F[i](static_cast<Eigen::Index>(ki), static_cast<Eigen::Index>(aidx[i]));
            }
            B(k, a) = prod * sv;
        }
    }
    Eigen::MatrixXd Vhat = B * B.transpose();
    return 0.5 * (Vhat + Vhat.transpose());
}

} // namespace

Eigen::MatrixXd assemble_bs_operator(const SchrodingerSpec& spec, const ReducedGrid& grid)
{
    Eigen::MatrixXd K = potential_in_modes(spec, grid);
    const std::vector<double> pref = mode_multiplier(grid, spec.theta, -0.25 * spec.s);
    const Eigen::Index n = K.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            K(i, j) *= pref[i] * pref[j];
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(K.cwiseAbs().maxCoeff(), 1e-300);
    if (asym > 1e-8 * scale)
        throw numerical_error("assemble_bs_operator: asymmetry above tolerance");
    return 0.5 * (K + K.transpose());
}

std::vector<double> symmetric_eigenvalues_desc(const Eigen::MatrixXd& K)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw numerical_error("symmetric eigensolver failed to converge");
    std::vector<double> mu(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(mu.begin(), mu.end(), std::greater<double>());
    return mu;
}

int bs_count(const std::vector<double>& mu_desc, double beta)
{
    if (!(beta > 0.0))
        throw input_error("bs_count: beta must be positive");
    // Boundary eigenvalues count; the 1e-12 guard keeps exact-threshold
    // constructions stable under rounding.
    const double thr = (1.0 - 1e-12) / beta;
    int count = 0;
    for (double mu : mu_desc) {
        if (mu >= thr)
            ++count;
        else
            break;
    }
    return count;
}

int bs_count(const SchrodingerSpec& spec, const ReducedGrid& grid)
{
    return bs_count(symmetric_eigenvalues_desc(assemble_bs_operator(spec, grid)), spec.beta);
}

// ---------------------------------------------------------------------------
// Max-Min test family
// ---------------------------------------------------------------------------

namespace {

// Generalized smoothstep S_N: [0,1] -> [0,1], C^N at both ends.
double smoothstep(int N, double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    auto binom = [](int a, int b) {
        double r = 1.0;
        for (int i = 1; i <= b; ++i)
            r = r * (a - b + i) / i;
        return r;
    };
    double acc = 0.0;
    for (int k = 0; k <= N; ++k)
        acc += binom(N + k, k) * binom(2 * N + 1, N - k) * std::pow(-x, k);
    return std::pow(x, N + 1) * acc;
}

} // namespace

std::size_t MaxMinFamily::size() const
{
    std::size_t total = 1;
    for (std::size_t i = 0; i < rho.size(); ++i)
        total *= static_cast<std::size_t>(per_axis());
    return total;
}

double MaxMinFamily::amplitude() const
{
    return std::pow(2.0, -0.5 * j * (s - d));
}

double MaxMinFamily::radius(int axis, int nu) const
{
    return rho[axis] + nu * std::ldexp(delta_ann, -j);
}

double MaxMinFamily::eta(double t) const
{
    if (t <= 0.0 || t >= delta_ann)
        return 0.0;
    const double quarter = 0.25 * delta_ann;
    if (t < quarter)
        return smoothstep(order, t / quarter);
    if (t > 3.0 * quarter)
        return smoothstep(order, (delta_ann - t) / quarter);
    return 1.0;
}

double MaxMinFamily::eta_j(double t) const
{
    return eta(std::ldexp(t, j));
}

std::vector<int> MaxMinFamily::unflatten(std::size_t flat_nu) const
{
    const int m = static_cast<int>(rho.size());
    std::vector<int> nu(m);
    for (int i = m - 1; i >= 0; --i) {
        nu[i] = static_cast<int>(flat_nu % per_axis());
        flat_nu /= per_axis();
    }
    return nu;
}

double MaxMinFamily::psi(const std::vector<double>& r, std::size_t flat_nu) const
{
    const std::vector<int> nu = unflatten(flat_nu);
    double val = amplitude();
    for (std::size_t i = 0; i < rho.size(); ++i) {
        val *= eta_j(r[i] - radius(static_cast<int>(i), nu[i]));
        if (val == 0.0)
            return 0.0;
    }
    return val;
}

MaxMinFamily build_test_functions(const SchrodingerSpec& spec, int j)
{
    if (j < 0)
        throw input_error("build_test_functions: j must be >= 0");
    if (spec.potential.kind != PotentialSpec::Kind::Annulus)
        throw input_error("build_test_functions: annulus potential required");
    MaxMinFamily fam;
    fam.j = j;
    fam.order = static_cast<int>(std::ceil(spec.s)) + 1;
    fam.s = spec.s;
    fam.d = spec.dec.d();
    fam.delta_ann = spec.potential.delta_ann;
    fam.rho = spec.potential.rho;
    return fam;
}

// ---------------------------------------------------------------------------
// Pencil assembly
// ---------------------------------------------------------------------------

namespace {

struct AxisData {
    std::vector<double> freq_sq;  // squared frequencies with quadrature folded in
    Eigen::MatrixXd C;            // (freq x family-per-axis) coefficient table
    std::vector<double> freq_wt;  // per-frequency weight (1 for grid route)
};

// Shared contraction: out[(v1..vm),(v1'..vm')] =
//   sum_k wt(k) mult(theta + sum freq_sq)^{power} prod_i C_i[k_i,v_i] C_i[k_i,v_i'].
Eigen::MatrixXd contract_pencil(const std::vector<AxisData>& axes, double theta, double power)
{
    const int m = static_cast<int>(axes.size());
    const int Fc = static_cast<int>(axes[0].C.cols());
    if (m == 1) {
        const auto& ax = axes[0];
        const Eigen::Index M = ax.C.rows();
        Eigen::VectorXd d(M);
        for (Eigen::Index k = 0; k < M; ++k)
            d(k) = ax.freq_wt[k] * std::pow(theta + ax.freq_sq[k], power);
        return ax.C.transpose() * d.asDiagonal() * ax.C;
    }
    if (m != 2)
        throw resource_error("maxmin pencil: implemented for m <= 2");
    const auto& a1 = axes[0];
    const auto& a2 = axes[1];
    const Eigen::Index M1 = a1.C.rows(), M2 = a2.C.rows();
    Eigen::MatrixXd P1(M1, Fc * Fc), P2(M2, Fc * Fc);
    for (int v = 0; v < Fc; ++v)
        for (int vp = 0; vp < Fc; ++vp) {
            P1.col(v * Fc + vp) = (a1.C.col(v).array() * a1.C.col(vp).array()).matrix();
            P2.col(v * Fc + vp) = (a2.C.col(v).array() * a2.C.col(vp).array()).matrix();
        }
    // T = Mult * P2 computed in row blocks; the full multiplier matrix can be
    // large at fine frequency quadratures.
    Eigen::MatrixXd T(M1, Fc * Fc);
    const Eigen::Index block = 256;
    Eigen::MatrixXd mult_block(block, M2);
    for (Eigen::Index b = 0; b < M1; b += block) {
        const Eigen::Index nb = std::min(block, M1 - b);
        for (Eigen::Index i = 0; i < nb; ++i)
            for (Eigen::Index k2 = 0; k2 < M2; ++k2)
                mult_block(i, k2) = a1.freq_wt[b + i] * a2.freq_wt[k2]
                                  * std::pow(theta + a1.freq_sq[b + i] + a2.freq_sq[k2], power);
        T.middleRows(b, nb) = mult_block.topRows(nb) * P2;
    }
    Eigen::MatrixXd flat = P1.transpose() * T; // (v1 v1') x (v2 v2')
    const int family = Fc * Fc;
    Eigen::MatrixXd out(family, family);
    for (int v1 = 0; v1 < Fc; ++v1)
        for (int v2 = 0; v2 < Fc; ++v2)
            for (int w1 = 0; w1 < Fc; ++w1)
                for (int w2 = 0; w2 < Fc; ++w2)
                    out(v1 * Fc + v2, w1 * Fc + w2) = flat(v1 * Fc + w1, v2 * Fc + w2);
    return out;
}

} // namespace

PencilMatrices maxmin_matrices(const SchrodingerSpec& spec, const MaxMinFamily& family,
                               const ReducedGrid& grid)
{
    const int m = spec.dec.m();
    if (m > 2)
        throw resource_error("maxmin_matrices: implemented for m <= 2");
    const int Fc = family.per_axis();
    const double amp2 = family.amplitude() * family.amplitude();
    const double cg = sphere_constant(spec.dec);

    // Per-axis coefficients of the bump factors in the Dirichlet basis.
    std::vector<AxisData> axes(m);
    for (int i = 0; i < m; ++i) {
        const int N = grid.nodes_per_axis[i];
        const int M = grid.modes_per_axis[i];
        Eigen::MatrixXd S(N, Fc);
        for (int a = 0; a < N; ++a)
            for (int v = 0; v < Fc; ++v)
                S(a, v) = family.eta_j(grid.r[i][a] - family.radius(i, v))
                        * std::sqrt(grid.w[i][a]);
        axes[i].C = grid.F[i] * S;
        axes[i].freq_sq.resize(M);
        axes[i].freq_wt.assign(M, 1.0);
        for (int k = 0; k < M; ++k)
            axes[i].freq_sq[k] = grid.rho[i][k] * grid.rho[i][k];
    }

    PencilMatrices pencil;
    pencil.A = amp2 * cg * contract_pencil(axes, spec.theta, 0.5 * spec.s);

    // B through exactly the potential form used by the Birman-Schwinger
    // assembly, so the subspace count interlaces the full count on this grid.
    if (spec.potential.kind == PotentialSpec::Kind::Annulus) {
        std::vector<Eigen::MatrixXd> E(m);
        for (int i = 0; i < m; ++i) {
            const Eigen::MatrixXd G = axis_annulus_gram(spec, grid, i);
            E[i] = axes[i].C.transpose() * G * axes[i].C; // Fc x Fc
        }
        const double scale = amp2 * cg * spec.potential.amplitude;
        if (m == 1) {
            pencil.B = scale * E[0];
        } else {
            Eigen::MatrixXd B(Fc * Fc, Fc * Fc);
            for (int v1 = 0; v1 < Fc; ++v1)
                for (int w1 = 0; w1 < Fc; ++w1)
                    B.block(v1 * Fc, w1 * Fc, Fc, Fc) = (scale * E[0](v1, w1)) * E[1];
            pencil.B = B;
        }
    } else {
        // Sampled potentials: quadrature of V against the projected samples.
        std::vector<Eigen::MatrixXd> D(m); // weighted samples back in node space
        for (int i = 0; i < m; ++i)
            D[i] = grid.F[i].transpose() * axes[i].C;
        std::vector<AxisData> baxes(m);
        const std::vector<double> V = sample_potential(spec, grid);
        if (m == 1) {
            baxes[0].C = D[0];
            baxes[0].freq_sq.assign(grid.nodes_per_axis[0], 0.0);
            baxes[0].freq_wt = V;
            pencil.B = amp2 * cg * contract_pencil(baxes, 1.0, 1.0);
        } else {
            const int N1 = grid.nodes_per_axis[0], N2 = grid.nodes_per_axis[1];
            Eigen::MatrixXd P1(N1, Fc * Fc), P2(N2, Fc * Fc);
            for (int v = 0; v < Fc; ++v)
                for (int vp = 0; vp < Fc; ++vp) {
                    P1.col(v * Fc + vp) = (D[0].col(v).array() * D[0].col(vp).array()).matrix();
                    P2.col(v * Fc + vp) = (D[1].col(v).array() * D[1].col(vp).array()).matrix();
                }
            Eigen::MatrixXd Vm(N1, N2);
            for (int a1 = 0; a1 < N1; ++a1)
                for (int a2 = 0; a2 < N2; ++a2)
                    Vm(a1, a2) = V[static_cast<std::size_t>(a1) * N2 + a2];
            Eigen::MatrixXd T = Vm * P2;
            Eigen::MatrixXd flat = P1.transpose() * T;
            Eigen::MatrixXd B(Fc * Fc, Fc * Fc);
            for (int v1 = 0; v1 < Fc; ++v1)
                for (int v2 = 0; v2 < Fc; ++v2)
                    for (int w1 = 0; w1 < Fc; ++w1)
                        for (int w2 = 0; w2 < Fc; ++w2)
                            B(v1 * Fc + v2, w1 * Fc + w2) = flat(v1 * Fc + w1, v2 * Fc + w2);
            pencil.B = amp2 * cg * B;
        }
    }
    pencil.A = 0.5 * (pencil.A + pencil.A.transpose()).eval();
    pencil.B = 0.5 * (pencil.B + pencil.B.transpose()).eval();
    return pencil;
}

PencilMatrices maxmin_matrices_continuum(const SchrodingerSpec& spec, const MaxMinFamily& family,
                                         double rho_max, int freq_points)
{
    const int m = spec.dec.m();
    if (m > 2)
        throw resource_error("maxmin_matrices_continuum: implemented for m <= 2");
    const int Fc = family.per_axis();
    const double amp2 = family.amplitude() * family.amplitude();
    const double cg = sphere_constant(spec.dec);
    const double delta = family.delta_ann;

    // The Sobolev form has a slowly decaying frequency tail; 128 bump
    // bandwidths keep the truncation below ~0.1%.
    if (rho_max <= 0.0)
        rho_max = std::ldexp(128.0 / delta, family.j);
    double r_outer = 0.0;
    for (int i = 0; i < m; ++i)
        r_outer = std::max(r_outer, family.rho[i] + delta);
    if (freq_points <= 0)
        freq_points = static_cast<int>(std::ceil(rho_max * r_outer * 1.6)) + 64;

    const int panels = std::max(8, freq_points / 12);
    std::vector<AxisData> axes(m);
    for (int i = 0; i < m; ++i) {
        const int gi = spec.dec.gamma()[i];
        const double nu = 0.5 * gi - 1.0;
        QuadratureRule fq = composite_gauss_legendre(12, panels, 0.0, rho_max);
        const int Q = static_cast<int>(fq.nodes.size());

        // Bump support quadrature (shared nodes shifted per member).
        const double width = std::ldexp(delta, -family.j);
        const int support_points = std::max(48, static_cast<int>(rho_max * width) + 24);
        QuadratureRule sq = gauss_legendre(support_points, 0.0, width);

        auto kernel = [&](double u) {
            if (u < 1e-6)
                return std::pow(2.0, -nu) / std::tgamma(nu + 1.0) * (1.0 - u * u / (4.0 * (nu + 1.0)));
            return std::pow(u, -nu) * bessel_j(nu, u);
        };

        axes[i].C.resize(Q, Fc);
        axes[i].freq_sq.resize(Q);
        axes[i].freq_wt.resize(Q);
        for (int q = 0; q < Q; ++q) {
            const double rho_q = fq.nodes[q];
            axes[i].freq_sq[q] = rho_q * rho_q;
            axes[i].freq_wt[q] = fq.weights[q] * std::pow(rho_q, gi - 1);
            for (int v = 0; v < Fc; ++v) {
                const double base = family.radius(i, v);
                double acc = 0.0;
                for (int t = 0; t < support_points; ++t) {
                    const double rr = base + sq.nodes[t];
                    acc += sq.weights[t] * family.eta_j(sq.nodes[t]) * kernel(rho_q * rr)
                         * std::pow(rr, gi - 1);
                }
                axes[i].C(q, v) = acc;
            }
        }
        // Fold the frequency weight into C so the shared contraction applies:
        // mult uses freq_wt, so leave C as raw transform values.
    }
    PencilMatrices pencil;
    pencil.A = amp2 * cg * contract_pencil(axes, spec.theta, 0.5 * spec.s);

    // Potential form: exact per-axis integrals for the annulus (diagonal since
    // member supports are pairwise disjoint); quadrature for sampled V.
    if (spec.potential.kind == PotentialSpec::Kind::Annulus) {
        const std::size_t total = family.size();
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(total, total);
        // per-axis integral of eta^2 r^(gamma-1) over each bump support
        std::vector<std::vector<double>> axis_int(m, std::vector<double>(Fc, 0.0));
        const double width = std::ldexp(delta, -family.j);
        QuadratureRule sq = gauss_legendre(96, 0.0, width);
        for (int i = 0; i < m; ++i) {
            const int gi = spec.dec.gamma()[i];
            for (int v = 0; v < Fc; ++v) {
                const double base = family.radius(i, v);
                double acc = 0.0;
                for (std::size_t t = 0; t < sq.nodes.size(); ++t) {
                    const double e = family.eta_j(sq.nodes[t]);
                    acc += sq.weights[t] * e * e * std::pow(base + sq.nodes[t], gi - 1);
                }
                axis_int[i][v] = acc;
            }
        }
        for (std::size_t f = 0; f < total; ++f) {
            const std::vector<int> nu = family.unflatten(f);
            double prod = 1.0;
            for (int i = 0; i < m; ++i)
                prod *= axis_int[i][nu[i]];
            B(f, f) = amp2 * cg * spec.potential.amplitude * prod;
        }
        pencil.B = B;
    } else {
        throw input_error("maxmin_matrices_continuum: sampled potentials not supported");
    }
    pencil.A = 0.5 * (pencil.A + pencil.A.transpose()).eval();
    return pencil;
}

int maxmin_negative_count(const PencilMatrices& pencil, double beta)
{
    if (!(beta >= 0.0))
        throw input_error("maxmin_negative_count: beta must be >= 0");
    const double bscale = pencil.B.cwiseAbs().maxCoeff();
    const double min_diag = pencil.B.diagonal().minCoeff();
    if (!(bscale > 0.0) || min_diag <= 1e-14 * bscale)
        throw numerical_error("maxmin_negative_count: potential Gram matrix is not positive "
                              "definite; the family is not resolved");
    Eigen::MatrixXd P = pencil.A - beta * pencil.B;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(P, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw numerical_error("maxmin_negative_count: eigensolver failed");
    const double scale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
    int count = 0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
        if (solver.eigenvalues()(i) < -1e-12 * scale)
            ++count;
    return count;
}

TestConstants fit_test_constants(const SchrodingerSpec& spec, const PencilMatrices& pencil,
                                 const MaxMinFamily& family)
{
    const int m = spec.dec.m();
    TestConstants c;
    double c1 = 0.0, c2 = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < family.size(); ++f) {
        const std::vector<int> nu = family.unflatten(f);
        double prodk = 1.0;
        for (int i = 0; i < m; ++i) {
            // k_i is the integer with 2^-j (k_i - 1) < r^(i) <= 2^-j k_i.
            const double k = std::ceil(std::ldexp(family.radius(i, nu[i]), family.j) - 1e-12);
            prodk *= std::pow(k, spec.dec.gamma()[i] - 1);
        }
        c1 = std::max(c1, pencil.A(f, f) / prodk);
        const double bnorm = std::sqrt(std::max(0.0, pencil.B(f, f)));
        c2 = std::min(c2, bnorm / (std::pow(2.0, -0.5 * family.j * spec.s) * std::sqrt(prodk)));
    }
    c.C1 = c1;
    c.C2 = c2;
    return c;
}

int select_level(const SchrodingerSpec& spec, double beta, const TestConstants& c, int j_cap)
{
    const double arg = c.C2 * c.C2 * beta / c.C1;
    int j = (arg > 0.0) ? static_cast<int>(std::floor(std::log2(arg) / spec.s)) : 0;
    return std::clamp(j, 0, j_cap);
}

int resolvable_level(const SchrodingerSpec& spec, const ReducedGrid& grid, int min_nodes)
{
    int j_max = 30;
    for (int i = 0; i < spec.dec.m(); ++i) {
        const double a = spec.potential.rho[i];
        const double gap = grid.max_spacing(i, a, a + spec.potential.delta_ann);
        const double level = std::log2(spec.potential.delta_ann / (min_nodes * gap));
        j_max = std::min(j_max, static_cast<int>(std::floor(level)));
    }
    return j_max;
}

CarlReport carl_check(const std::vector<double>& eigenvalues_desc,
                      const std::vector<double>& entropy_upper_bounds)
{
    CarlReport report;
    const std::size_t n = std::min(eigenvalues_desc.size(), entropy_upper_bounds.size());
    for (std::size_t k = 0; k < n; ++k) {
        CarlRow row;
        row.k = static_cast<int>(k + 1);
        row.lambda = eigenvalues_desc[k];
        row.entropy_upper = entropy_upper_bounds[k];
        row.margin = std::sqrt(2.0) * row.entropy_upper - std::abs(row.lambda);
        if (row.margin < -1e-12 * std::max(1.0, std::abs(row.lambda)))
            report.ok = false;
        report.rows.push_back(row);
    }
    return report;
}

ScanResult scan_beta(const SchrodingerSpec& spec, const std::vector<double>& betas,
                     const ReducedGrid& grid, const ReducedGrid* convergence_grid)
{
    if (betas.size() < 2)
        throw input_error("scan_beta: need at least 2 beta values");
    ScanResult result;

    const std::vector<double> mu = symmetric_eigenvalues_desc(assemble_bs_operator(spec, grid));

    const int j_cap = std::max(0, resolvable_level(spec, grid));
    result.maxmin_j_cap = j_cap;

    // Rule constants from the reference pencil at the coarsest level.
    MaxMinFamily ref = build_test_functions(spec, 0);
    PencilMatrices ref_pencil = maxmin_matrices(spec, ref, grid);
    const TestConstants consts = fit_test_constants(spec, ref_pencil, ref);

    std::map<int, PencilMatrices> pencil_cache;
    pencil_cache.emplace(0, std::move(ref_pencil));

    for (double beta : betas) {
        ScanRow row;
        row.beta = beta;
        row.bs = bs_count(mu, beta);
        const int j = select_level(spec, beta, consts, j_cap);
        auto it = pencil_cache.find(j);
        if (it == pencil_cache.end()) {
            MaxMinFamily fam = build_test_functions(spec, j);
            it = pencil_cache.emplace(j, maxmin_matrices(spec, fam, grid)).first;
        }
        row.maxmin = maxmin_negative_count(it->second, beta);
        row.grid_n = grid.nodes_per_axis[0];
        row.residual = grid.unitarity_residual;
        result.rows.push_back(row);
    }

    if (convergence_grid != nullptr) {
        SchrodingerSpec at_top = spec;
        at_top.beta = betas.back();
        const int fine = bs_count(at_top, *convergence_grid);
        const int coarse = result.rows.back().bs;
        result.convergence_rel_diff =
            std::abs(fine - coarse) / std::max(1.0, static_cast<double>(coarse));
        result.convergence_warning = result.convergence_rel_diff > 0.05;
    }
    return result;
}

GrowthFit fit_growth(const std::vector<double>& betas, const std::vector<double>& counts,
                     const BlockDecomposition& dec)
{
    std::vector<double> x, y, z;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (counts[i] > 0.0) {
            x.push_back(std::log(betas[i]));
            y.push_back(std::log(counts[i]));
            z.push_back(std::log(std::log2(std::max(2.0, betas[i]))));
        }
    }
    GrowthFit fit;
    fit.points_used = static_cast<int>(x.size());
    if (x.size() < 2)
        throw input_error("fit_growth: need at least 2 nonzero counts");
    const LinearFit plain = ols_fit(x, y);
    fit.exponent = plain.slope;
    const int n = dec.n();
    const int g1 = dec.gamma()[0];
    const double corr = double(n - 1) * double(g1 - 1) / double(g1);
    if (corr > 0.0 && x.size() >= 3) {
        try {
            const TwoRegressorFit both = ols_fit2(x, z, y);
            fit.log_gain = plain.residual_variance > 0.0
                               ? 1.0 - both.residual_variance / plain.residual_variance
                               : 0.0;
        } catch (const input_error&) {
            fit.log_gain = 0.0; // collinear at short ranges
        }
    }
    return fit;
}

void write_scan_csv(const ScanResult& scan, std::ostream& os)
{
    os << "beta,bs_count,maxmin_count,grid_N,unitarity_residual\n";
    char buf[64];
    for (const ScanRow& row : scan.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.beta);
        os << buf << ',' << row.bs << ',' << row.maxmin << ',' << row.grid_n << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.residual);
        os << buf << '\n';
    }
}

} // namespace blockrad
