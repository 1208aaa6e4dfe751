#include "blockrad/geometry.hpp"
#include "blockrad/errors.hpp"
#include "blockrad/gauss.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace blockrad {

using nlohmann::json;

BlockDecomposition::BlockDecomposition(std::vector<int> gamma_user)
{
    if (gamma_user.empty())
        throw input_error("BlockDecomposition: gamma must be non-empty");
    for (int g : gamma_user)
        if (g < 2)
            throw input_error("BlockDecomposition: every gamma_i must be >= 2");

    const int m = static_cast<int>(gamma_user.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return gamma_user[a] < gamma_user[b]; });

    gamma_.resize(m);
    perm_.resize(m);
    for (int pos = 0; pos < m; ++pos) {
        gamma_[pos] = gamma_user[order[pos]];
        perm_[order[pos]] = pos;
    }
    d_ = std::accumulate(gamma_.begin(), gamma_.end(), 0);
    n_ = 1;
    while (n_ < m && gamma_[n_] == gamma_[0])
        ++n_;
    alphas_.resize(m);
    for (int i = 0; i < m; ++i)
        alphas_[i] = double(gamma_[i] - 1) / double(d_ - m);
}

std::string BlockDecomposition::to_json() const
{
    json j;
    j["gamma"] = gamma_;
    return j.dump();
}

BlockDecomposition BlockDecomposition::from_json(const std::string& text)
{
    json j = json::parse(text);
    if (!j.contains("gamma") || !j["gamma"].is_array())
        throw input_error("BlockDecomposition: JSON must contain a \"gamma\" array");
    return BlockDecomposition(j["gamma"].get<std::vector<int>>());
}

double DyadicCube::side() const
{
    return std::ldexp(1.0, -nu);
}

std::vector<double> block_radii(const std::vector<double>& x, const BlockDecomposition& dec)
{
    if (static_cast<int>(x.size()) != dec.d())
        throw input_error("block_radii: x has wrong dimension");
    // User layout lists blocks in input order; radii are reported in stored order.
    const std::vector<int>& perm = dec.sort_permutation();
    const int m = dec.m();
    std::vector<int> user_gamma(m);
    for (int u = 0; u < m; ++u)
        user_gamma[u] = dec.gamma()[perm[u]];
    std::vector<double> r(m, 0.0);
    std::size_t off = 0;
    for (int u = 0; u < m; ++u) {
        double s = 0.0;
        for (int j = 0; j < user_gamma[u]; ++j) {
            s += x[off + j] * x[off + j];
        }
        r[perm[u]] = std::sqrt(s);
        off += user_gamma[u];
    }
    return r;
}

double weight_w_gamma(const std::vector<double>& r, const BlockDecomposition& dec)
{
    if (static_cast<int>(r.size()) != dec.m())
        throw input_error("weight_w_gamma: r has wrong dimension");
    double w = 1.0;
    for (int i = 0; i < dec.m(); ++i)
        w *= std::pow(std::abs(r[i]), dec.gamma()[i] - 1);
    return w;
}

namespace {

// Antiderivative of |r|^(gamma-1): sign(r) |r|^gamma / gamma.
double abs_power_antiderivative(double r, int gamma)
{
    const double s = (r < 0.0) ? -1.0 : 1.0;
    return s * std::pow(std::abs(r), gamma) / gamma;
}

} // namespace

double axis_cube_weight(std::int64_t k, int gamma)
{
    const double a = static_cast<double>(k);
    return abs_power_antiderivative(a + 1.0, gamma) - abs_power_antiderivative(a, gamma);
}

double cube_weight(const DyadicCube& cube, const BlockDecomposition& dec)
{
    if (static_cast<int>(cube.index.size()) != dec.m())
        throw input_error("cube_weight: cube dimension mismatch");
    const double h = cube.side();
    double w = 1.0;
    for (int i = 0; i < dec.m(); ++i) {
        const int g = dec.gamma()[i];
        const double lo = h * static_cast<double>(cube.index[i]);
        const double hi = lo + h;
        w *= abs_power_antiderivative(hi, g) - abs_power_antiderivative(lo, g);
    }
    return w;
}

std::size_t ReducedFunction::total_count() const
{
    std::size_t n = 1;
    for (const auto& g : grid)
        n *= g.size();
    return n;
}

std::size_t ReducedFunction::flat_index(const std::vector<std::size_t>& idx) const
{
    std::size_t flat = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        flat = flat * grid[i].size() + idx[i];
    return flat;
}

double ReducedFunction::interpolate(const std::vector<double>& r) const
{
    const int m = dec.m();
    if (static_cast<int>(r.size()) != m)
        throw input_error("ReducedFunction::interpolate: dimension mismatch");
    // Per-axis bracketing with linear weights; clamp outside grid range.
    std::vector<std::size_t> lo(m);
    std::vector<double> t(m);
    for (int i = 0; i < m; ++i) {
        const auto& g = grid[i];
        const double ri = std::abs(r[i]); // even extension in each radius
        if (ri <= g.front()) {
            lo[i] = 0;
            t[i] = 0.0;
        } else if (ri >= g.back()) {
            lo[i] = g.size() - 1;
            t[i] = 0.0;
        } else {
            auto it = std::upper_bound(g.begin(), g.end(), ri);
            lo[i] = static_cast<std::size_t>(it - g.begin()) - 1;
            t[i] = (ri - g[lo[i]]) / (g[lo[i] + 1] - g[lo[i]]);
        }
    }
    double acc = 0.0;
    const int corners = 1 << m;
    std::vector<std::size_t> idx(m);
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        bool skip = false;
        for (int i = 0; i < m; ++i) {
            const bool hi = (c >> i) & 1;
            if (hi) {
                if (lo[i] + 1 >= grid[i].size() || t[i] == 0.0) {
                    skip = true;
                    break;
                }
                idx[i] = lo[i] + 1;
                w *= t[i];
            } else {
                idx[i] = lo[i];
                w *= 1.0 - t[i];
            }
        }
        if (!skip && w != 0.0)
            acc += w * values[flat_index(idx)];
    }
    return acc;
}

ReducedFunction make_reduced_grid(const BlockDecomposition& dec, const std::vector<double>& T,
                                  int points_per_axis)
{
    if (static_cast<int>(T.size()) != dec.m())
        throw input_error("make_reduced_grid: T dimension mismatch");
    if (points_per_axis < 2)
        throw input_error("make_reduced_grid: need >= 2 points per axis");
    ReducedFunction g{dec, {}, {}, {}};
    const int panels = std::max(1, points_per_axis / 8);
    const int order = (points_per_axis + panels - 1) / panels;
    for (int i = 0; i < dec.m(); ++i) {
        if (!(T[i] > 0.0))
            throw input_error("make_reduced_grid: T_i must be positive");
        QuadratureRule q = composite_gauss_legendre(order, panels, 0.0, T[i]);
        const int gi = dec.gamma()[i];
        for (std::size_t a = 0; a < q.nodes.size(); ++a)
            q.weights[a] *= std::pow(q.nodes[a], gi - 1);
        g.grid.push_back(std::move(q.nodes));
        g.weights.push_back(std::move(q.weights));
    }
    g.values.assign(g.total_count(), 0.0);
    return g;
}

namespace {

// Trace point in the user coordinate layout: r_j placed on the first
// coordinate of the j-th user block.
std::vector<double> trace_point(const BlockDecomposition& dec, const std::vector<double>& r_sorted)
{
    const std::vector<int>& perm = dec.sort_permutation();
    const int m = dec.m();
    std::vector<double> x(static_cast<std::size_t>(dec.d()), 0.0);
    std::size_t off = 0;
    for (int u = 0; u < m; ++u) {
        const int g = dec.gamma()[perm[u]];
        x[off] = r_sorted[perm[u]];
        off += static_cast<std::size_t>(g);
    }
    return x;
}

} // namespace

void trace(const std::function<double(const std::vector<double>&)>& f, ReducedFunction& out)
{
    const int m = out.dec.m();
    std::vector<std::size_t> idx(m, 0);
    std::vector<double> r(m);
    const std::size_t total = out.total_count();
    out.values.assign(total, 0.0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int i = m - 1; i >= 0; --i) {
            idx[i] = rem % out.grid[i].size();
            rem /= out.grid[i].size();
        }
        for (int i = 0; i < m; ++i)
            r[i] = out.grid[i][idx[i]];
        out.values[flat] = f(trace_point(out.dec, r));
    }
}

double extend(const ReducedFunction& g, const std::vector<double>& x)
{
    return g.interpolate(block_radii(x, g.dec));
}

double invariance_audit(const std::function<double(const std::vector<double>&)>& f,
                        const ReducedFunction& g, std::uint64_t seed, int rotations_per_point)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> pick(0, 1 << 20);

    const BlockDecomposition& dec = g.dec;
    const std::vector<int>& perm = dec.sort_permutation();
    const int m = dec.m();
    std::vector<int> user_gamma(m);
    std::vector<std::size_t> offsets(m);
    {
        std::size_t off = 0;
        for (int u = 0; u < m; ++u) {
            user_gamma[u] = dec.gamma()[perm[u]];
            offsets[u] = off;
            off += static_cast<std::size_t>(user_gamma[u]);
        }
    }

    double max_dev = 0.0;
    std::vector<std::size_t> idx(m, 0);
    std::vector<double> r(m);
    const std::size_t total = g.total_count();
    const std::size_t stride = std::max<std::size_t>(1, total / 64);
    for (std::size_t flat = 0; flat < total; flat += stride) {
        std::size_t rem = flat;
        for (int i = m - 1; i >= 0; --i) {
            idx[i] = rem % g.grid[i].size();
            rem /= g.grid[i].size();
        }
        for (int i = 0; i < m; ++i)
            r[i] = g.grid[i][idx[i]];
        std::vector<double> x = trace_point(dec, r);
        const double base = f(x);
        for (int rot = 0; rot < rotations_per_point; ++rot) {
            std::vector<double> y = x;
            // Random Givens rotation inside each block.
            for (int u = 0; u < m; ++u) {
                const int gdim = user_gamma[u];
                int a = pick(rng) % gdim;
                int b = pick(rng) % gdim;
                if (a == b)
                    b = (b + 1) % gdim;
                const double th = angle(rng);
                const double c = std::cos(th), s = std::sin(th);
                const double ya = y[offsets[u] + a], yb = y[offsets[u] + b];
                y[offsets[u] + a] = c * ya - s * yb;
                y[offsets[u] + b] = s * ya + c * yb;
            }
            max_dev = std::max(max_dev, std::abs(f(y) - base));
        }
    }
    return max_dev;
}

double sphere_constant(const BlockDecomposition& dec)
{
    double c = 1.0;
    for (int g : dec.gamma())
        c *= 2.0 * std::pow(M_PI, 0.5 * g) / std::tgamma(0.5 * g);
    return c;
}

double lp_norm_reduced(const ReducedFunction& g, double p)
{
    if (p < 1.0)
        throw input_error("lp_norm_reduced: p must be >= 1");
    const std::size_t total = g.total_count();
    if (std::isinf(p)) {
        double mx = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            mx = std::max(mx, std::abs(g.values[i]));
        return mx; // sample max; a lower bound on the essential sup
    }
    const int m = g.dec.m();
    double acc = 0.0;
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double w = 1.0;
        for (int i = m - 1; i >= 0; --i) {
            const std::size_t k = rem % g.grid[i].size();
            rem /= g.grid[i].size();
            w *= g.weights[i][k];
        }
        acc += w * std::pow(std::abs(g.values[flat]), p);
    }
    return std::pow(sphere_constant(g.dec) * acc, 1.0 / p);
}

void write_reduced_csv(const ReducedFunction& g, std::ostream& os)
{
    os << "axis_counts,gamma\n";
    const int m = g.dec.m();
    for (int i = 0; i < m; ++i)
        os << g.grid[i].size() << (i + 1 < m ? ' ' : ',');
    for (int i = 0; i < m; ++i)
        os << g.dec.gamma()[i] << (i + 1 < m ? ' ' : '\n');

    char buf[64];
    std::vector<std::size_t> idx(m, 0);
    const std::size_t total = g.total_count();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int i = m - 1; i >= 0; --i) {
            idx[i] = rem % g.grid[i].size();
            rem /= g.grid[i].size();
        }
        for (int i = 0; i < m; ++i)
            os << idx[i] << ',';
        for (int i = 0; i < m; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", g.grid[i][idx[i]]);
            os << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", g.values[flat]);
        os << buf << '\n';
    }
}

ReducedFunction read_reduced_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("axis_counts", 0) != 0)
        throw input_error("read_reduced_csv: missing header");
    if (!std::getline(is, line))
        throw input_error("read_reduced_csv: missing shape row");
    const auto comma = line.find(',');
    if (comma == std::string::npos)
        throw input_error("read_reduced_csv: malformed shape row");

    auto parse_ints = [](const std::string& s) {
        std::vector<int> out;
        std::istringstream ss(s);
        int v;
        while (ss >> v)
            out.push_back(v);
        return out;
    };
    const std::vector<int> counts = parse_ints(line.substr(0, comma));
    const std::vector<int> gamma = parse_ints(line.substr(comma + 1));
    if (counts.empty() || counts.size() != gamma.size())
        throw input_error("read_reduced_csv: axis_counts/gamma mismatch");

    ReducedFunction g{BlockDecomposition(gamma), {}, {}, {}};
    const int m = g.dec.m();
    g.grid.assign(m, {});
    for (int i = 0; i < m; ++i)
        g.grid[i].assign(static_cast<std::size_t>(counts[i]), 0.0);
    g.values.assign(g.total_count(), 0.0);

    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::vector<std::size_t> idx(m);
        std::string cell;
        for (int i = 0; i < m; ++i) {
            std::getline(ss, cell, ',');
            idx[i] = static_cast<std::size_t>(std::stoull(cell));
            if (idx[i] >= g.grid[i].size())
                throw input_error("read_reduced_csv: index out of range");
        }
        for (int i = 0; i < m; ++i) {
            std::getline(ss, cell, ',');
            g.grid[i][idx[i]] = std::stod(cell);
        }
        std::getline(ss, cell, ',');
        g.values[g.flat_index(idx)] = std::stod(cell);
    }

    // Quadrature weights are not stored; rebuild trapezoid weights with the
    // radial factor absorbed so norms remain computable after a round trip.
    g.weights.assign(m, {});
    for (int i = 0; i < m; ++i) {
        const auto& nodes = g.grid[i];
        const std::size_t n = nodes.size();
        g.weights[i].assign(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
            double left = (a == 0) ? nodes[0] : 0.5 * (nodes[a] - nodes[a - 1]);
            double right = (a + 1 == n) ? 0.0 : 0.5 * (nodes[a + 1] - nodes[a]);
            g.weights[i][a] = (left + right) * std::pow(nodes[a], g.dec.gamma()[i] - 1);
        }
    }
    return g;
}

} // namespace blockrad
