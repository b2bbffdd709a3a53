#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "experiment.hpp"

using namespace kp;
namespace fs = std::filesystem;

namespace {

std::string small_stable_cfg(const std::string& outdir) {
    return R"({
      "alpha": 1.0, "dim": 1,
      "grid": {"L": 50.0, "n": 512, "t0": 0.0, "t1": 1.0, "n_steps": 2},
      "stable": {"t_values": [1.0]},
      "seed": 7,
      "output_dir": ")" + outdir + R"("
    })";
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(Experiment::from_json_text("not json"), config_error);
    CHECK_THROWS_AS(Experiment::from_json_text("{}"), config_error);
    // out-of-range alpha
    CHECK_THROWS_AS(Experiment::from_json_text(R"({"alpha": 2.5, "dim": 1,
        "grid": {"L": 50, "n": 64, "t0": 0, "t1": 1, "n_steps": 2},
        "output_dir": "x"})"),
                    config_error);
    // unknown keys are rejected at every level
    CHECK_THROWS_AS(Experiment::from_json_text(R"({"alpha": 1.0, "dim": 1, "bogus": 1,
        "grid": {"L": 50, "n": 64, "t0": 0, "t1": 1, "n_steps": 2},
        "output_dir": "x"})"),
                    config_error);
    CHECK_THROWS_AS(Experiment::from_json_text(R"({"alpha": 1.0, "dim": 1,
        "grid": {"L": 50, "n": 64, "t0": 0, "t1": 1, "n_steps": 2, "extra": 3},
        "output_dir": "x"})"),
                    config_error);
    // odd lattice
    CHECK_THROWS_AS(Experiment::from_json_text(R"({"alpha": 1.0, "dim": 1,
        "grid": {"L": 50, "n": 63, "t0": 0, "t1": 1, "n_steps": 2},
        "output_dir": "x"})"),
                    config_error);
    // missing output_dir
    CHECK_THROWS_AS(Experiment::from_json_text(R"({"alpha": 1.0, "dim": 1,
        "grid": {"L": 50, "n": 64, "t0": 0, "t1": 1, "n_steps": 2}})"),
                    config_error);
    // valid
    CHECK_NOTHROW(Experiment::from_json_text(small_stable_cfg("x")));
}

TEST_CASE("stable run produces deterministic outputs") {
    fs::path dir1 = fs::temp_directory_path() / "kp_exp_a";
    fs::path dir2 = fs::temp_directory_path() / "kp_exp_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    Experiment e1 = Experiment::from_json_text(small_stable_cfg(dir1.string()));
    e1.run("stable");
    CHECK(e1.checks_passed());
    e1.write_outputs(dir1.string());

    Experiment e2 = Experiment::from_json_text(small_stable_cfg(dir1.string()));
    e2.run("stable");
    e2.write_outputs(dir2.string());

    CHECK(read_file(dir1 / "report.json") == read_file(dir2 / "report.json"));
    CHECK(read_file(dir1 / "density_t1.csv") == read_file(dir2 / "density_t1.csv"));
    // CSV format: header then rows, LF endings
    std::string csv = read_file(dir1 / "density_t1.csv");
    CHECK(csv.substr(0, 9) == "x0,value\n");
    CHECK(csv.find("\r") == std::string::npos);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("perturb run: no-certificate instance fails cleanly") {
    // epsilon far beyond the smallness regime: scan tops out at eta >= 1
    std::string cfg = R"({
      "alpha": 1.0, "dim": 1,
      "grid": {"L": 50.0, "n": 512, "t0": 0.0, "t1": 1.0, "n_steps": 4},
      "jump": {"kind": "epsilon_stable", "epsilon": 10.0},
      "kernel": {"time_rule": "node"},
      "seed": 7, "output_dir": "unused"
    })";
    Experiment e = Experiment::from_json_text(cfg);
    e.run("perturb");
    CHECK_FALSE(e.checks_passed());
    CHECK(e.report_text().find("no-certificate") != std::string::npos);
}

TEST_CASE("perturb run: zero jump is all-trivial") {
    std::string cfg = R"({
      "alpha": 1.0, "dim": 1,
      "grid": {"L": 50.0, "n": 512, "t0": 0.0, "t1": 1.0, "n_steps": 4},
      "jump": {"kind": "zero"},
      "kernel": {"time_rule": "node"},
      "seed": 7, "output_dir": "unused"
    })";
    Experiment e = Experiment::from_json_text(cfg);
    e.run("perturb");
    CHECK(e.checks_passed());
}

TEST_CASE("meyer run: removal precondition failure sets exit state") {
    std::string cfg = R"({
      "alpha": 1.0, "dim": 1,
      "grid": {"L": 50.0, "n": 512, "t0": 0.0, "t1": 1.0, "n_steps": 2},
      "jump": {"kind": "measure",
               "mu_spec": {"binner": "gaussian", "mass": 5.0, "sigma": 20.0, "remove": true}},
      "meyer": {"two_path": false},
      "seed": 7, "output_dir": "unused"
    })";
    Experiment e = Experiment::from_json_text(cfg);
    e.run("meyer");
    CHECK_FALSE(e.checks_passed());
    CHECK(e.report_text().find("remove_error") != std::string::npos);
}

TEST_CASE("kernel cache round trip") {
    fs::path cache = fs::temp_directory_path() / "kp_cache_test";
    fs::remove_all(cache);
    fs::create_directories(cache);
    setenv("KP_CACHE_DIR", cache.c_str(), 1);

    nlohmann::json cfg = nlohmann::json::parse(small_stable_cfg("x"));
    bool hit1 = true, hit2 = false;
    ForwardKernel k1 = cached_stable_kernel(cfg, &hit1);
    CHECK_FALSE(hit1);
    ForwardKernel k2 = cached_stable_kernel(cfg, &hit2);
    CHECK(hit2);
    CHECK(max_entry_diff(k1, k2) == 0.0);

    // different config subtree gets a different key
    cfg["grid"]["n_steps"] = 3;
    bool hit3 = true;
    cached_stable_kernel(cfg, &hit3);
    CHECK_FALSE(hit3);

    unsetenv("KP_CACHE_DIR");
    fs::remove_all(cache);
}

TEST_CASE("format_double round-trips 17 significant digits") {
    for (double v : {1.0 / 3.0, 2.718281828459045, -1.2345678901234567e-100}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

#ifdef KPCLI_PATH
TEST_CASE("cli exit codes") {
    fs::path dir = fs::temp_directory_path() / "kp_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << small_stable_cfg((dir / "out").string());

    std::string cli = KPCLI_PATH;
    int rc = std::system((cli + " stable --config " + cfg.string() + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));

    // malformed config: exit 2
    fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{\"alpha\": 2.5}";
    rc = std::system((cli + " stable --config " + bad.string() + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // missing subcommand: exit 2
    rc = std::system((cli + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
    fs::remove_all(dir);
}
#endif
