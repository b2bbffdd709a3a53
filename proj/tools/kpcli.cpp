// Batch experiment driver over the kperturb C API.
//
// Exit codes: 0 all checks passed, 1 a mathematical check failed,
// 2 configuration or usage error.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "kperturb/kperturb.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;

int exit_code_for(kp_status st) {
    switch (st) {
        case KP_OK:
            return kExitPass;
        case KP_ERR_CONFIG:
        case KP_ERR_INVALID_ARGUMENT:
        case KP_ERR_IO:
            return kExitConfig;
        default:
            return kExitCheckFailed;
    }
}

int run_experiment(const std::string& subcommand, const std::string& config_path,
                   const std::string& output_override, bool has_seed, std::uint64_t seed,
                   int threads) {
    if (threads > 0) kp_set_threads(threads);
    kp_experiment* exp = nullptr;
    kp_status st = kp_experiment_create_from_file(config_path.c_str(), &exp);
    if (st != KP_OK) {
        std::fprintf(stderr, "error (%s): cannot load config %s\n", kp_status_name(st),
                     config_path.c_str());
        return exit_code_for(st);
    }
    if (has_seed) kp_experiment_set_seed(exp, seed);

    st = kp_experiment_run(exp, subcommand.c_str());
    if (st != KP_OK) {
        std::fprintf(stderr, "error (%s): %s\n", kp_status_name(st),
                     kp_experiment_last_error(exp));
        int code = exit_code_for(st);
        kp_experiment_destroy(exp);
        return code;
    }

    const char* report = kp_experiment_report(exp);
    if (report != nullptr) std::fputs(report, stdout);

    st = kp_experiment_write_outputs(exp,
                                     output_override.empty() ? nullptr : output_override.c_str());
    if (st != KP_OK) {
        std::fprintf(stderr, "error (%s): %s\n", kp_status_name(st),
                     kp_experiment_last_error(exp));
        kp_experiment_destroy(exp);
        return exit_code_for(st);
    }

    int passed = kp_experiment_checks_passed(exp);
    kp_experiment_destroy(exp);
    return passed == 1 ? kExitPass : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kperturb experiment driver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool has_seed = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "JSON experiment configuration")
                ->required()
                ->check(CLI::ExistingFile);
        cmd->add_option("--output", output_dir, "output directory (overrides config)");
        cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
        cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            has_seed = true;
        });
    };

    CLI::App* stable = app.add_subcommand("stable", "density, scaling and sharp-bound diagnostics");
    CLI::App* perturb = app.add_subcommand("perturb", "smallness certificate and series bounds");
    CLI::App* meyer = app.add_subcommand("meyer", "jump addition/removal and Monte-Carlo check");
    CLI::App* fundsol = app.add_subcommand("fundsol", "weak-form fundamental solution residuals");
    CLI::App* selftest = app.add_subcommand("selftest", "run the full acceptance suite");
    for (CLI::App* cmd : {stable, perturb, meyer, fundsol}) add_common(cmd, true);
    add_common(selftest, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (selftest->parsed()) {
        if (threads > 0) kp_set_threads(threads);
        int all_passed = 0;
        char* report = nullptr;
        kp_status st = kp_selftest(/*verbose=*/1, &all_passed, &report);
        if (st != KP_OK) {
            std::fprintf(stderr, "error (%s): selftest did not complete\n", kp_status_name(st));
            return kExitCheckFailed;
        }
        if (!output_dir.empty() && report != nullptr) {
            std::string path = output_dir + "/selftest.json";
            FILE* f = std::fopen(path.c_str(), "wb");
            if (f != nullptr) {
                std::fputs(report, f);
                std::fclose(f);
            }
        }
        kp_string_free(report);
        return all_passed == 1 ? kExitPass : kExitCheckFailed;
    }

    std::string sub;
    for (CLI::App* cmd : {stable, perturb, meyer, fundsol})
        if (cmd->parsed()) sub = cmd->get_name();
    return run_experiment(sub, config_path, output_dir, has_seed, seed, threads);
}
