#include "doctest.h"

#include "blockrad/cli.hpp"
#include "blockrad/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace blockrad;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const char* name)
{
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("range parsing")
{
    CHECK(parse_level_range("3..6") == std::vector<int>{3, 4, 5, 6});
    CHECK_THROWS_AS(parse_level_range("6..3"), input_error);
    CHECK_THROWS_AS(parse_level_range("abc"), std::exception);

    const std::vector<double> betas = parse_beta_range("16..4096:geometric:9");
    REQUIRE(betas.size() == 9);
    CHECK(betas.front() == doctest::Approx(16.0));
    CHECK(betas.back() == doctest::Approx(4096.0));
    CHECK(betas[1] / betas[0] == doctest::Approx(2.0));
    CHECK_THROWS_AS(parse_beta_range("16..4096:linear:9"), input_error);

    // power tokens
    const std::vector<double> pow_betas = parse_beta_range("2^4..2^12:geometric:9");
    REQUIRE(pow_betas.size() == 9);
    CHECK(pow_betas.front() == doctest::Approx(16.0));
    CHECK(pow_betas.back() == doctest::Approx(4096.0));
}

TEST_CASE("shells command writes census and meta")
{
    const fs::path dir = fresh_dir("blockrad_cli_shells");
    ExperimentConfig cfg;
    cfg.command = "shells";
    cfg.gamma = {2, 2};
    cfg.levels = "3..11";
    cfg.mode = "N0";
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);

    const std::string csv = slurp(dir / "shells.csv");
    CHECK(csv.rfind("L,count,mode,gamma", 0) == 0);
    // 9 data rows
    int rows = -1;
    for (char c : csv)
        rows += (c == '\n');
    CHECK(rows == 9);

    const std::string meta = slurp(dir / "meta.json");
    CHECK(meta.find("\"command\": \"shells\"") != std::string::npos);
    CHECK(meta.find("shells.csv") != std::string::npos);
}

TEST_CASE("scan command row count matches the beta grid")
{
    const fs::path dir = fresh_dir("blockrad_cli_scan");
    ExperimentConfig cfg;
    cfg.command = "scan";
    cfg.spec_json = R"({"s":3,"theta":1.0,"r":2,"gamma":[2,2],
                       "potential":{"kind":"annulus","rho":[1,1],"delta":1.0}})";
    cfg.beta_range = "16..4096:geometric:9";
    cfg.grid_n = 32;
    cfg.convergence_check = false;
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);

    const std::string csv = slurp(dir / "scan.csv");
    int rows = -1;
    for (char c : csv)
        rows += (c == '\n');
    CHECK(rows == 9);
}

TEST_CASE("error paths and exit codes")
{
    const fs::path dir = fresh_dir("blockrad_cli_err");
    ExperimentConfig cfg;
    cfg.command = "frobnicate";
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitUsage);
    CHECK(slurp(dir / "error.json").find("unknown command") != std::string::npos);

    // module precondition: gamma entry below 2
    cfg.command = "shells";
    cfg.gamma = {1, 2};
    cfg.levels = "0..4";
    CHECK(run(cfg) == kExitPrecondition);

    // budget exhaustion surfaces as a precondition failure with the feasible range
    cfg.gamma = {2, 2};
    cfg.levels = "0..25";
    CHECK(run(cfg) == kExitPrecondition);
    CHECK(slurp(dir / "error.json").find("levels 0..") != std::string::npos);
}

TEST_CASE("determinism: identical config and seed give identical bytes")
{
    ExperimentConfig cfg;
    cfg.command = "volume";
    cfg.gamma = {2, 2, 2};
    cfg.r_values = {2.0, 8.0, 64.0};
    cfg.mc_samples = 200000;
    cfg.seed = 31337;

    const fs::path d1 = fresh_dir("blockrad_cli_det1");
    const fs::path d2 = fresh_dir("blockrad_cli_det2");
    cfg.out_dir = d1.string();
    CHECK(run(cfg) == kExitOk);
    cfg.out_dir = d2.string();
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(d1 / "volume.csv") == slurp(d2 / "volume.csv"));

    // a different seed changes the Monte-Carlo column
    cfg.seed = 1;
    const fs::path d3 = fresh_dir("blockrad_cli_det3");
    cfg.out_dir = d3.string();
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(d1 / "volume.csv") != slurp(d3 / "volume.csv"));
}

TEST_CASE("trace-check, enumerate, entropy-bounds, fit round trip")
{
    const fs::path dir = fresh_dir("blockrad_cli_misc");
    ExperimentConfig cfg;
    cfg.command = "trace-check";
    cfg.gamma = {2, 2};
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);
    const std::string tc = slurp(dir / "trace_check.csv");
    CHECK(tc.find("gaussian") != std::string::npos);

    cfg.command = "enumerate";
    cfg.length = 32;
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(dir / "enumerate.csv").find("ell,v_gamma,k1,k2") == 0);

    cfg.command = "entropy-bounds";
    cfg.spec_json = R"({"gamma":[2,2],"p1":1,"p2":2,"N":32})";
    cfg.k_max = 10;
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(dir / "rates.csv").find("k,lower_bound,upper_bound,kuhn_rate,schutt_rate") == 0);

    cfg = {};
    cfg.command = "spectrum";
    cfg.spec_json = R"({"s":3,"theta":1.0,"r":2,"gamma":[2,2],
                       "potential":{"kind":"annulus","rho":[1,1],"delta":1.0}})";
    cfg.grid_n = 32;
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(dir / "eigenvalues.csv").find("k,mu") == 0);

    cfg = {};
    cfg.command = "shells";
    cfg.gamma = {2, 2};
    cfg.levels = "2..6";
    cfg.mode = "volume";
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);
    CHECK(slurp(dir / "shells.csv").find("volume") != std::string::npos);

    // shells then fit on the produced census
    cfg = {};
    cfg.command = "shells";
    cfg.gamma = {2, 3};
    cfg.levels = "3..11";
    cfg.out_dir = dir.string();
    CHECK(run(cfg) == kExitOk);
    cfg.command = "fit";
    cfg.fit_input = (dir / "shells.csv").string();
    cfg.fit_kind = "shells";
    CHECK(run(cfg) == kExitOk);
    const std::string fit = slurp(dir / "fit.json");
    CHECK(fit.find("\"slope\"") != std::string::npos);
    CHECK(fit.find("\"theoretical\": 3.0") != std::string::npos);
}

TEST_SUITE_END();
