#include "kperturb/kperturb.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "experiment.hpp"
#include "selftest.hpp"
#include "stable.hpp"

struct kp_experiment {
    kp::Experiment impl;
    std::string last_error;
};

namespace {

kp_status status_of(const std::exception& e) {
    if (dynamic_cast<const kp::config_error*>(&e)) return KP_ERR_CONFIG;
    if (dynamic_cast<const kp::invalid_argument_error*>(&e)) return KP_ERR_INVALID_ARGUMENT;
    if (dynamic_cast<const kp::precondition_error*>(&e)) return KP_ERR_PRECONDITION;
    if (dynamic_cast<const kp::no_convergence_error*>(&e)) return KP_ERR_NO_CONVERGENCE;
    if (dynamic_cast<const kp::unsupported_perturbation_error*>(&e))
        return KP_ERR_UNSUPPORTED_PERTURBATION;
    if (dynamic_cast<const kp::aliasing_error*>(&e)) return KP_ERR_ALIASING;
    if (dynamic_cast<const kp::io_error*>(&e)) return KP_ERR_IO;
    return KP_ERR_INTERNAL;
}

template <typename F>
kp_status guarded(kp_experiment* exp, F&& f) {
    try {
        f();
        if (exp != nullptr) exp->last_error.clear();
        return KP_OK;
    } catch (const std::exception& e) {
        if (exp != nullptr) exp->last_error = e.what();
        return status_of(e);
    } catch (...) {
        if (exp != nullptr) exp->last_error = "unknown error";
        return KP_ERR_INTERNAL;
    }
}

}  // namespace

extern "C" {

const char* kp_version(void) { return kp::version_string(); }

const char* kp_status_name(kp_status status) {
    switch (status) {
        case KP_OK: return "ok";
        case KP_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case KP_ERR_PRECONDITION: return "precondition-violation";
        case KP_ERR_NO_CONVERGENCE: return "no-convergence";
        case KP_ERR_UNSUPPORTED_PERTURBATION: return "unsupported-perturbation";
        case KP_ERR_ALIASING: return "aliasing-error";
        case KP_ERR_CONFIG: return "config-error";
        case KP_ERR_IO: return "io-error";
        case KP_ERR_INTERNAL: return "internal-error";
    }
    return "unknown";
}

kp_status kp_experiment_create(const char* config_json, kp_experiment** out) {
    if (config_json == nullptr || out == nullptr) return KP_ERR_INVALID_ARGUMENT;
    *out = nullptr;
    auto* handle = new kp_experiment();
    kp_status st = guarded(handle, [&] {
        handle->impl = kp::Experiment::from_json_text(config_json);
    });
    if (st != KP_OK) {
        delete handle;
        return st;
    }
    *out = handle;
    return KP_OK;
}

kp_status kp_experiment_create_from_file(const char* path, kp_experiment** out) {
    if (path == nullptr || out == nullptr) return KP_ERR_INVALID_ARGUMENT;
    *out = nullptr;
    auto* handle = new kp_experiment();
    kp_status st = guarded(handle, [&] { handle->impl = kp::Experiment::from_file(path); });
    if (st != KP_OK) {
        delete handle;
        return st;
    }
    *out = handle;
    return KP_OK;
}

void kp_experiment_destroy(kp_experiment* exp) { delete exp; }

kp_status kp_experiment_set_seed(kp_experiment* exp, uint64_t seed) {
    if (exp == nullptr) return KP_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { exp->impl.set_seed(seed); });
}

kp_status kp_experiment_set_threads(kp_experiment* exp, int threads) {
    if (exp == nullptr) return KP_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { exp->impl.set_threads(threads); });
}

kp_status kp_experiment_run(kp_experiment* exp, const char* subcommand) {
    if (exp == nullptr || subcommand == nullptr) return KP_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { exp->impl.run(subcommand); });
}

const char* kp_experiment_report(const kp_experiment* exp) {
    if (exp == nullptr || !exp->impl.has_run()) return nullptr;
    return exp->impl.report_text().c_str();
}

int kp_experiment_checks_passed(const kp_experiment* exp) {
    if (exp == nullptr || !exp->impl.has_run()) return -1;
    return exp->impl.checks_passed() ? 1 : 0;
}

kp_status kp_experiment_write_outputs(kp_experiment* exp, const char* output_dir) {
    if (exp == nullptr) return KP_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] {
        std::string dir = output_dir != nullptr
                              ? std::string(output_dir)
                              : exp->impl.config()["output_dir"].get<std::string>();
        exp->impl.write_outputs(dir);
    });
}

kp_status kp_set_threads(int threads) {
    kp::set_thread_count(threads);
    return KP_OK;
}

const char* kp_experiment_last_error(const kp_experiment* exp) {
    return exp == nullptr ? "" : exp->last_error.c_str();
}

kp_status kp_stable_density(double alpha, int dim, double t, double half_width, int n_per_dim,
                            double* values, double* truncation_mass) {
    if (values == nullptr) return KP_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, [&] {
        kp::StableParams p = kp::make_stable_params(alpha, dim);
        kp::SpaceGrid g = kp::make_space_grid(dim, half_width, n_per_dim);
        kp::StableDensitySlice slice = kp::stable_density_grid(p, g, t);
        std::memcpy(values, slice.field.values.data(),
                    slice.field.values.size() * sizeof(double));
        if (truncation_mass != nullptr) *truncation_mass = slice.truncation_mass;
    });
}

kp_status kp_selftest(int verbose, int* all_passed, char** report_json) {
    return guarded(nullptr, [&] {
        kp::SelftestReport report = kp::run_selftest(verbose != 0);
        if (all_passed != nullptr) *all_passed = report.all_passed ? 1 : 0;
        if (report_json != nullptr) {
            std::string text = report.to_json();
            char* buf = static_cast<char*>(std::malloc(text.size() + 1));
            std::memcpy(buf, text.c_str(), text.size() + 1);
            *report_json = buf;
        }
    });
}

void kp_string_free(char* s) { std::free(s); }

}  // extern "C"
