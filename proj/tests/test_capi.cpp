// Exercises the shared-library C interface end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "kperturb/kperturb.h"

namespace {

const char* kStableCfg = R"({
  "alpha": 1.0, "dim": 1,
  "grid": {"L": 50.0, "n": 512, "t0": 0.0, "t1": 1.0, "n_steps": 2},
  "stable": {"t_values": [1.0]},
  "seed": 7,
  "output_dir": "unused"
})";

}  // namespace

TEST_CASE("version and status names") {
    CHECK(kp_version() != nullptr);
    CHECK(std::strcmp(kp_status_name(KP_OK), "ok") == 0);
    CHECK(std::strcmp(kp_status_name(KP_ERR_CONFIG), "config-error") == 0);
}

TEST_CASE("experiment lifecycle over the C interface") {
    kp_experiment* exp = nullptr;
    REQUIRE(kp_experiment_create(kStableCfg, &exp) == KP_OK);
    REQUIRE(exp != nullptr);
    CHECK(kp_experiment_checks_passed(exp) == -1);
    CHECK(kp_experiment_report(exp) == nullptr);

    CHECK(kp_experiment_set_seed(exp, 99) == KP_OK);
    REQUIRE(kp_experiment_run(exp, "stable") == KP_OK);
    CHECK(kp_experiment_checks_passed(exp) == 1);
    const char* report = kp_experiment_report(exp);
    REQUIRE(report != nullptr);
    CHECK(std::string(report).find("\"passed\": true") != std::string::npos);
    kp_experiment_destroy(exp);
}

TEST_CASE("config errors surface as status codes") {
    kp_experiment* exp = nullptr;
    CHECK(kp_experiment_create("{\"alpha\": 2.5}", &exp) == KP_ERR_CONFIG);
    CHECK(exp == nullptr);
    CHECK(kp_experiment_create("garbage", &exp) == KP_ERR_CONFIG);
    CHECK(kp_experiment_create(nullptr, &exp) == KP_ERR_INVALID_ARGUMENT);
    CHECK(kp_experiment_create_from_file("/nonexistent/kp.json", &exp) == KP_ERR_CONFIG);

    REQUIRE(kp_experiment_create(kStableCfg, &exp) == KP_OK);
    CHECK(kp_experiment_run(exp, "nonsense") == KP_ERR_CONFIG);
    CHECK(std::strlen(kp_experiment_last_error(exp)) > 0);
    kp_experiment_destroy(exp);
}

TEST_CASE("stateless density helper matches the Cauchy closed form") {
    const int n = 512;
    std::vector<double> values(n);
    double trunc = -1.0;
    REQUIRE(kp_stable_density(1.0, 1, 1.0, 50.0, n, values.data(), &trunc) == KP_OK);
    double h = 100.0 / n;
    double x0 = -50.0 + (n / 2) * h;
    CHECK(std::abs(values[n / 2] - 1.0 / (M_PI * (1.0 + x0 * x0))) < 1e-6);
    CHECK(trunc > 0.0);
    CHECK(trunc < 0.05);

    CHECK(kp_stable_density(2.5, 1, 1.0, 50.0, n, values.data(), nullptr) ==
          KP_ERR_INVALID_ARGUMENT);
    CHECK(kp_stable_density(1.0, 1, -1.0, 50.0, n, values.data(), nullptr) ==
          KP_ERR_INVALID_ARGUMENT);
}
