#include "blockrad/cli.hpp"
#include "blockrad/counting.hpp"
#include "blockrad/errors.hpp"
#include "blockrad/geometry.hpp"
#include "blockrad/seqspace.hpp"
#include "blockrad/spectral.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace blockrad {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<int> parse_level_range(const std::string& text)
{
    const auto dots = text.find("..");
    if (dots == std::string::npos)
        throw input_error("level range must look like a..b");
    const int a = std::stoi(text.substr(0, dots));
    const int b = std::stoi(text.substr(dots + 2));
    if (b < a)
        throw input_error("level range must be increasing");
    std::vector<int> out;
    for (int v = a; v <= b; ++v)
        out.push_back(v);
    return out;
}

namespace {

// Accepts plain decimals and power tokens like "2^12".
double parse_bound(const std::string& text)
{
    const auto caret = text.find('^');
    if (caret == std::string::npos)
        return std::stod(text);
    const double base = std::stod(text.substr(0, caret));
    const double expo = std::stod(text.substr(caret + 1));
    return std::pow(base, expo);
}

} // namespace

std::vector<double> parse_beta_range(const std::string& text)
{
    // lo..hi:geometric:n
    const auto dots = text.find("..");
    const auto colon1 = text.find(':', dots == std::string::npos ? 0 : dots);
    if (dots == std::string::npos || colon1 == std::string::npos)
        throw input_error("beta range must look like lo..hi:geometric:n");
    const auto colon2 = text.find(':', colon1 + 1);
    if (colon2 == std::string::npos)
        throw input_error("beta range must look like lo..hi:geometric:n");
    const double lo = parse_bound(text.substr(0, dots));
    const double hi = parse_bound(text.substr(dots + 2, colon1 - dots - 2));
    const std::string kind = text.substr(colon1 + 1, colon2 - colon1 - 1);
    const int n = std::stoi(text.substr(colon2 + 1));
    if (kind != "geometric")
        throw input_error("only geometric beta grids are supported");
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw input_error("beta range needs 0 < lo < hi and n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return out;
}

namespace {

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string load_spec_text(const std::string& spec_json)
{
    if (spec_json.empty())
        throw input_error("this command needs --spec");
    if (!spec_json.empty() && spec_json.front() == '{')
        return spec_json;
    std::ifstream in(spec_json);
    if (!in)
        throw input_error("cannot open spec file: " + spec_json);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw input_error("cannot write " + path.string());
    out << content;
}

struct CommandOutput {
    json params;
    std::vector<std::string> files;
};

CommandOutput cmd_trace_check(const ExperimentConfig& cfg, const fs::path& dir)
{
    if (cfg.gamma.empty())
        throw input_error("trace-check needs --gamma");
    BlockDecomposition dec(cfg.gamma);
    const int d = dec.d();

    std::ostringstream csv;
    csv << "case,p,computed,expected,rel_err\n";

    auto gauss = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return std::exp(-s);
    };
    auto bump = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return std::max(0.0, 1.0 - s);
    };

    ReducedFunction gg = make_reduced_grid(dec, std::vector<double>(dec.m(), 6.0), 96);
    trace(gauss, gg);
    ReducedFunction gb = make_reduced_grid(dec, std::vector<double>(dec.m(), 1.0), 96);
    trace(bump, gb);

    auto emit = [&](const char* name, double p, double computed, double expected) {
        const double rel = std::abs(computed - expected) / std::max(std::abs(expected), 1e-300);
        csv << name << ',' << format_double(p) << ',' << format_double(computed) << ','
            << format_double(expected) << ',' << format_double(rel) << '\n';
    };

    for (double p : {1.0, 2.0}) {
        const double exp_gauss = std::pow(M_PI / p, 0.5 * d / p);
        emit("gaussian", p, lp_norm_reduced(gg, p), exp_gauss);
        const double ip = std::pow(M_PI, 0.5 * d) * std::tgamma(p + 1.0)
                        / std::tgamma(p + 1.0 + 0.5 * d);
        emit("bump", p, lp_norm_reduced(gb, p), std::pow(ip, 1.0 / p));
    }

    // Round trip at grid points and the invariance audit.
    double max_rt = 0.0;
    {
        std::vector<std::size_t> idx(dec.m(), 0);
        const std::size_t total = gg.total_count();
        const std::size_t stride = std::max<std::size_t>(1, total / 128);
        for (std::size_t flat = 0; flat < total; flat += stride) {
            std::size_t rem = flat;
            std::vector<double> r(dec.m());
            for (int i = dec.m() - 1; i >= 0; --i) {
                idx[i] = rem % gg.grid[i].size();
                rem /= gg.grid[i].size();
            }
            for (int i = 0; i < dec.m(); ++i)
                r[i] = gg.grid[i][idx[i]];
            std::vector<double> x(static_cast<std::size_t>(d), 0.0);
            std::size_t off = 0;
            for (int u = 0; u < dec.m(); ++u) {
                const int g = dec.gamma()[dec.sort_permutation()[u]];
                x[off] = r[dec.sort_permutation()[u]];
                off += static_cast<std::size_t>(g);
            }
            max_rt = std::max(max_rt, std::abs(extend(gg, x) - gauss(x)));
        }
    }
    emit("roundtrip_max_abs_dev", 0.0, max_rt, 0.0);
    emit("invariance_audit_max_dev", 0.0, invariance_audit(gauss, gg, cfg.seed), 0.0);

    write_file(dir / "trace_check.csv", csv.str());
    CommandOutput out;
    out.params = {{"gamma", cfg.gamma}};
    out.files = {"trace_check.csv"};
    return out;
}

CommandOutput cmd_shells(const ExperimentConfig& cfg, const fs::path& dir)
{
    if (cfg.gamma.empty())
        throw input_error("shells needs --gamma");
    if (cfg.levels.empty())
        throw input_error("shells needs --levels a..b");
    BlockDecomposition dec(cfg.gamma);
    const std::vector<int> levels = parse_level_range(cfg.levels);
    ShellMode mode;
    if (cfg.mode == "Z")
        mode = ShellMode::ZLattice;
    else if (cfg.mode == "N0")
        mode = ShellMode::N0Lattice;
    else if (cfg.mode == "volume")
        mode = ShellMode::Volume;
    else
        throw input_error("shells mode must be Z, N0 or volume");

    ShellCensus census = build_census(dec, levels.front(), levels.back(), mode);
    std::ostringstream csv;
    write_census_csv(census, csv);
    write_file(dir / "shells.csv", csv.str());

    CommandOutput out;
    out.params = {{"gamma", cfg.gamma}, {"levels", cfg.levels}, {"mode", cfg.mode}};
    out.files = {"shells.csv"};
    return out;
}

CommandOutput cmd_volume(const ExperimentConfig& cfg, const fs::path& dir)
{
    if (cfg.gamma.empty())
        throw input_error("volume needs --gamma");
    BlockDecomposition dec(cfg.gamma);
    std::vector<double> rs = cfg.r_values;
    if (rs.empty())
        for (int e = 1; e <= 12; ++e)
            rs.push_back(std::ldexp(1.0, e));

    std::ostringstream csv;
    csv << "R,volume,lower,upper,valid_from_R,mc\n";
    for (double R : rs) {
        const double vol = volume_VmR(R, dec);
        const VolumeSandwich s = volume_sandwich(R, dec);
        csv << format_double(R) << ',' << format_double(vol) << ',' << format_double(s.lower)
            << ',' << format_double(s.upper) << ',' << format_double(s.valid_from_R) << ',';
        if (cfg.mc_samples > 0)
            csv << format_double(volume_monte_carlo(R, dec, cfg.mc_samples, cfg.seed));
        csv << '\n';
    }
    write_file(dir / "volume.csv", csv.str());

    CommandOutput out;
    out.params = {{"gamma", cfg.gamma}, {"mc_samples", cfg.mc_samples}};
    out.files = {"volume.csv"};
    return out;
}

CommandOutput cmd_enumerate(const ExperimentConfig& cfg, const fs::path& dir)
{
    if (cfg.gamma.empty())
        throw input_error("enumerate needs --gamma");
    BlockDecomposition dec(cfg.gamma);
    OrderedWeightSequence seq = enumerate_tau(dec, cfg.length);

    std::ostringstream csv;
    csv << "ell,v_gamma";
    for (int i = 0; i < dec.m(); ++i)
        csv << ",k" << i + 1;
    csv << '\n';
    for (std::size_t l = 0; l < seq.values.size(); ++l) {
        csv << l << ',' << format_double(seq.values[l]);
        for (std::int64_t k : seq.index_map[l])
            csv << ',' << k;
        csv << '\n';
    }
    write_file(dir / "enumerate.csv", csv.str());

    CommandOutput out;
    out.params = {{"gamma", cfg.gamma}, {"length", cfg.length}};
    out.files = {"enumerate.csv"};
    return out;
}

CommandOutput cmd_entropy_bounds(const ExperimentConfig& cfg, const fs::path& dir)
{
    std::vector<int> gamma = cfg.gamma;
    double p1 = cfg.p1, p2 = cfg.p2;
    int N = cfg.n_trunc;
    if (!cfg.spec_json.empty()) {
        json j = json::parse(load_spec_text(cfg.spec_json));
        if (j.contains("gamma"))
            gamma = j["gamma"].get<std::vector<int>>();
        p1 = j.value("p1", p1);
        p2 = j.value("p2", p2);
        N = j.value("N", N);
    }
    if (gamma.empty())
        throw input_error("entropy-bounds needs gamma (flag or spec)");
    BlockDecomposition dec(gamma);
    DiagonalOperatorSpec spec = DiagonalOperatorSpec::block_radial(dec, p1, p2);

    std::ostringstream csv;
    csv << "k,lower_bound,upper_bound,kuhn_rate,schutt_rate\n";
    for (int k = 1; k <= cfg.k_max; ++k) {
        const double lo = entropy_lower_bound(spec, N, k);
        const double hi = entropy_upper_bound(spec, N, k, std::max(N, 64), std::max(cfg.k_max, 30));
        const double rate = k >= 2 ? kuhn_rate(k, spec).value : spec.sigma(1);
        const double schutt = schutt_rate(k, k, p1, p2);
        csv << k << ',' << format_double(lo) << ',' << format_double(hi) << ','
            << format_double(rate) << ',' << format_double(schutt) << '\n';
    }
    write_file(dir / "rates.csv", csv.str());

    CommandOutput out;
    out.params = {{"gamma", gamma}, {"p1", p1}, {"p2", p2}, {"N", N}, {"k_max", cfg.k_max}};
    out.files = {"rates.csv"};
    return out;
}

CommandOutput cmd_spectrum(const ExperimentConfig& cfg, const fs::path& dir)
{
    SchrodingerSpec spec = SchrodingerSpec::from_json(load_spec_text(cfg.spec_json));
    ReducedGrid grid = build_grid(spec.dec, std::vector<int>(spec.dec.m(), cfg.grid_n),
                                  default_truncation(spec));
    const std::vector<double> mu = symmetric_eigenvalues_desc(assemble_bs_operator(spec, grid));

    std::ostringstream csv;
    csv << "k,mu\n";
    for (std::size_t k = 0; k < mu.size(); ++k)
        csv << k + 1 << ',' << format_double(mu[k]) << '\n';
    write_file(dir / "eigenvalues.csv", csv.str());

    CommandOutput out;
    out.params = {{"spec", json::parse(spec.to_json())},
                  {"grid_n", cfg.grid_n},
                  {"unitarity_residual", grid.unitarity_residual}};
    out.files = {"eigenvalues.csv"};
    return out;
}

CommandOutput cmd_scan(const ExperimentConfig& cfg, const fs::path& dir)
{
    SchrodingerSpec spec = SchrodingerSpec::from_json(load_spec_text(cfg.spec_json));
    if (cfg.beta_range.empty())
        throw input_error("scan needs --beta lo..hi:geometric:n");
    const std::vector<double> betas = parse_beta_range(cfg.beta_range);

    ReducedGrid grid = build_grid(spec.dec, std::vector<int>(spec.dec.m(), cfg.grid_n),
                                  default_truncation(spec));
    ScanResult scan;
    if (cfg.convergence_check) {
        ReducedGrid fine = build_grid(spec.dec, std::vector<int>(spec.dec.m(), 2 * cfg.grid_n),
                                      default_truncation(spec));
        scan = scan_beta(spec, betas, grid, &fine);
    } else {
        scan = scan_beta(spec, betas, grid, nullptr);
    }

    std::ostringstream csv;
    write_scan_csv(scan, csv);
    write_file(dir / "scan.csv", csv.str());

    CommandOutput out;
    out.params = {{"spec", json::parse(spec.to_json())},
                  {"beta", cfg.beta_range},
                  {"grid_n", cfg.grid_n},
                  {"convergence_warning", scan.convergence_warning},
                  {"convergence_rel_diff", scan.convergence_rel_diff},
                  {"maxmin_j_cap", scan.maxmin_j_cap}};
    out.files = {"scan.csv"};
    return out;
}

CommandOutput cmd_fit(const ExperimentConfig& cfg, const fs::path& dir)
{
    if (cfg.fit_input.empty())
        throw input_error("fit needs --in <csv>");
    std::ifstream in(cfg.fit_input);
    if (!in)
        throw input_error("cannot open " + cfg.fit_input);
    std::string header;
    std::getline(in, header);

    json report;
    if (cfg.fit_kind == "shells") {
        std::vector<int> levels;
        std::vector<double> counts;
        std::vector<int> gamma;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            std::istringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            levels.push_back(std::stoi(cell));
            std::getline(ss, cell, ',');
            counts.push_back(std::stod(cell));
            std::getline(ss, cell, ','); // mode
            std::getline(ss, cell, ','); // gamma
            if (gamma.empty()) {
                std::istringstream gs(cell);
                int v;
                while (gs >> v)
                    gamma.push_back(v);
            }
        }
        if (gamma.empty())
            throw input_error("fit: no gamma column in census csv");
        ShellCensus census{BlockDecomposition(gamma), ShellMode::N0Lattice, levels, counts};
        const ShellFit fit = fit_shell_exponent(census, cfg.fit_cumulative);
        report = {{"slope", fit.slope},
                  {"slope_corrected", fit.slope_corrected},
                  {"theoretical", fit.theoretical_slope},
                  {"log_gain", fit.log_correction_gain},
                  {"cumulative", cfg.fit_cumulative}};
    } else if (cfg.fit_kind == "scan") {
        if (cfg.gamma.empty())
            throw input_error("fit --kind scan needs --gamma");
        BlockDecomposition dec(cfg.gamma);
        std::vector<double> betas, bs, mm;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            std::istringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            betas.push_back(std::stod(cell));
            std::getline(ss, cell, ',');
            bs.push_back(std::stod(cell));
            std::getline(ss, cell, ',');
            mm.push_back(std::stod(cell));
        }
        const GrowthFit fit = fit_growth(betas, bs, dec);
        report = {{"slope", fit.exponent},
                  {"log_gain", fit.log_gain},
                  {"points_used", fit.points_used}};
        try {
            const GrowthFit mfit = fit_growth(betas, mm, dec);
            report["maxmin_slope"] = mfit.exponent;
            report["maxmin_points_used"] = mfit.points_used;
        } catch (const input_error&) {
            report["maxmin_slope"] = nullptr;
        }
    } else {
        throw input_error("fit kind must be shells or scan");
    }
    write_file(dir / "fit.json", report.dump(2) + "\n");

    CommandOutput out;
    out.params = {{"in", cfg.fit_input}, {"kind", cfg.fit_kind}};
    out.files = {"fit.json"};
    return out;
}

} // namespace

int run(const ExperimentConfig& config)
{
    const auto start = std::chrono::steady_clock::now();

    // BLOCKRAD_THREADS caps internal parallelism (Eigen products).
    if (const char* env = std::getenv("BLOCKRAD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0)
            Eigen::setNbThreads(cap);
    }

    fs::path dir(config.out_dir.empty() ? "." : config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    auto fail = [&](int code, const char* kind, const std::string& message) {
        json err = {{"error", {{"kind", kind}, {"message", message}, {"command", config.command}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        std::ofstream out(dir / "error.json", std::ios::binary);
        if (out)
            out << err.dump(2) << '\n';
        return code;
    };

    CommandOutput result;
    try {
        if (config.command == "trace-check")
            result = cmd_trace_check(config, dir);
        else if (config.command == "shells")
            result = cmd_shells(config, dir);
        else if (config.command == "volume")
            result = cmd_volume(config, dir);
        else if (config.command == "enumerate")
            result = cmd_enumerate(config, dir);
        else if (config.command == "entropy-bounds")
            result = cmd_entropy_bounds(config, dir);
        else if (config.command == "spectrum")
            result = cmd_spectrum(config, dir);
        else if (config.command == "scan")
            result = cmd_scan(config, dir);
        else if (config.command == "fit")
            result = cmd_fit(config, dir);
        else
            return fail(kExitUsage, "usage", "unknown command: " + config.command);
    } catch (const input_error& e) {
        return fail(kExitPrecondition, "precondition", e.what());
    } catch (const resource_error& e) {
        return fail(kExitPrecondition, "precondition", e.what());
    } catch (const numerical_error& e) {
        return fail(kExitNumerical, "numerical", e.what());
    } catch (const std::exception& e) {
        return fail(kExitUsage, "usage", e.what());
    }

    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    json meta = {{"command", config.command},
                 {"parameters", result.params},
                 {"seed", config.seed},
                 {"wall_ms", wall.count()},
                 {"version", "0.1.0"},
                 {"outputs", result.files}};
    write_file(dir / "meta.json", meta.dump(2) + "\n");
    return kExitOk;
}

} // namespace blockrad
