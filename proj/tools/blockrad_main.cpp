#include "blockrad/cli.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<int> parse_gamma(const std::string& text)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ','))
        if (!cell.empty())
            out.push_back(std::stoi(cell));
    return out;
}

std::vector<double> parse_doubles(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ','))
        if (!cell.empty())
            out.push_back(std::stod(cell));
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"block-radial function spaces: shells, volumes, entropy bounds and "
                 "Birman-Schwinger bound-state counting"};
    app.require_subcommand(1);

    blockrad::ExperimentConfig cfg;
    std::string gamma_text, r_text;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--seed", cfg.seed, "seed for randomized oracles");
    };

    CLI::App* trace = app.add_subcommand("trace-check", "trace/extension identities");
    trace->add_option("--gamma", gamma_text, "block dimensions, e.g. 2,2")->required();
    add_common(trace);

    CLI::App* shells = app.add_subcommand("shells", "lattice shell census");
    shells->add_option("--gamma", gamma_text)->required();
    shells->add_option("--levels", cfg.levels, "a..b")->required();
    shells->add_option("--mode", cfg.mode, "Z | N0 | volume");
    add_common(shells);

    CLI::App* volume = app.add_subcommand("volume", "hyperbolic-cross volumes");
    volume->add_option("--gamma", gamma_text)->required();
    volume->add_option("--R", r_text, "comma list of R values");
    volume->add_option("--mc-samples", cfg.mc_samples, "Monte-Carlo check samples");
    add_common(volume);

    CLI::App* enumerate = app.add_subcommand("enumerate", "ordered cube weights");
    enumerate->add_option("--gamma", gamma_text)->required();
    enumerate->add_option("--length", cfg.length, "sequence length");
    add_common(enumerate);

    CLI::App* entropy = app.add_subcommand("entropy-bounds", "two-sided entropy bounds");
    entropy->add_option("--gamma", gamma_text);
    entropy->add_option("--spec", cfg.spec_json, "JSON: {gamma,p1,p2,N}");
    entropy->add_option("--p1", cfg.p1);
    entropy->add_option("--p2", cfg.p2);
    entropy->add_option("--N", cfg.n_trunc, "truncation dimension");
    entropy->add_option("--k-max", cfg.k_max);
    add_common(entropy);

    CLI::App* spectrum = app.add_subcommand("spectrum", "Birman-Schwinger eigenvalues");
    spectrum->add_option("--spec", cfg.spec_json, "spec JSON (file or inline)")->required();
    spectrum->add_option("--grid-n", cfg.grid_n, "nodes per axis");
    add_common(spectrum);

    CLI::App* scan = app.add_subcommand("scan", "bound-state counts over beta");
    scan->add_option("--spec", cfg.spec_json)->required();
    scan->add_option("--beta", cfg.beta_range, "lo..hi:geometric:n")->required();
    scan->add_option("--grid-n", cfg.grid_n);
    scan->add_flag("--no-convergence-check", [&](std::int64_t) { cfg.convergence_check = false; },
                   "skip the doubled-grid check");
    add_common(scan);

    CLI::App* fit = app.add_subcommand("fit", "exponent fits of census/scan tables");
    fit->add_option("--in", cfg.fit_input, "input csv")->required();
    fit->add_option("--kind", cfg.fit_kind, "shells | scan");
    fit->add_option("--gamma", gamma_text, "needed for --kind scan");
    fit->add_flag("--cumulative", cfg.fit_cumulative, "fit running totals");
    add_common(fit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (app.exit(e) == 0)
            return 0;
        std::fprintf(stderr, "{\"error\":{\"kind\":\"usage\",\"message\":\"%s\"}}\n", e.what());
        return blockrad::kExitUsage;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    if (!gamma_text.empty())
        cfg.gamma = parse_gamma(gamma_text);
    if (!r_text.empty())
        cfg.r_values = parse_doubles(r_text);
    return blockrad::run(cfg);
}
