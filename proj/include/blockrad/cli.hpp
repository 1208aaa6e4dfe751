#ifndef BLOCKRAD_CLI_HPP
#define BLOCKRAD_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace blockrad {

// Batch experiment description. One command per process; every run writes its
// outputs plus a meta.json next to them.
struct ExperimentConfig {
    std::string command; // trace-check | shells | volume | enumerate |
                         // entropy-bounds | spectrum | scan | fit
    std::vector<int> gamma;
    std::string levels;     // "a..b" (inclusive integers)
    std::string beta_range; // "lo..hi:geometric:n"
    std::string spec_json;  // path to a JSON file or inline JSON
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int grid_n = 64;
    bool convergence_check = true;
    std::size_t length = 1000; // enumerate
    int k_max = 20;            // entropy-bounds
    int n_trunc = 64;
    double p1 = 1.0;
    double p2 = 2.0;
    std::vector<double> r_values; // volume command
    std::string mode = "N0";      // shells: Z | N0 | volume
    std::int64_t mc_samples = 0;  // volume command, 0 = skip
    std::string fit_input;        // fit command: csv produced by shells/scan
    std::string fit_kind = "shells"; // shells | scan
    bool fit_cumulative = false;  // fit the running totals instead of per-shell
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitNumerical = 4;

// Parse "a..b" into the inclusive integer list.
std::vector<int> parse_level_range(const std::string& text);

// Parse "lo..hi:geometric:n" into n geometrically spaced values.
std::vector<double> parse_beta_range(const std::string& text);

// Executes the experiment, writes artifacts under config.out_dir, and returns
// the process exit code. Failures additionally write error.json.
int run(const ExperimentConfig& config);

} // namespace blockrad

#endif
