#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "levy.hpp"
#include "perturb.hpp"

namespace kp {

// Batch experiment driver: one configuration, one subcommand, one report.
// Configurations are strict JSON records; unknown keys are rejected.
class Experiment {
  public:
    static Experiment from_json_text(const std::string& text);
    static Experiment from_file(const std::string& path);

    void set_seed(std::uint64_t seed);
    void set_threads(int threads);

    // subcommand: stable | perturb | meyer | fundsol
    void run(const std::string& subcommand);

    const std::string& report_text() const { return report_text_; }
    bool checks_passed() const { return passed_; }
    bool has_run() const { return has_run_; }

    // Writes the report and all CSV artifacts. Directory must exist or be
    // creatable; file contents are byte-deterministic for a fixed config.
    void write_outputs(const std::string& dir) const;

    const nlohmann::json& config() const { return cfg_; }

  private:
    void run_stable();
    void run_perturb();
    void run_meyer();
    void run_fundsol();
    void finalize(bool passed);

    nlohmann::json cfg_;
    nlohmann::json report_;
    std::string report_text_;
    std::string subcommand_;
    bool passed_ = false;
    bool has_run_ = false;
    std::vector<std::pair<std::string, std::string>> files_;
};

// 17-significant-digit CSV cell for lossless round trips.
std::string format_double(double v);

// Content hash used as the kernel-cache key (FNV-1a over the canonical
// serialization of the generating config subtree).
std::string config_hash(const nlohmann::json& subtree);

// Builds (or loads from KP_CACHE_DIR) the stationary base kernel described by
// the config. Returns whether the cache was hit.
ForwardKernel cached_stable_kernel(const nlohmann::json& cfg, bool* cache_hit);

JumpKernel jump_from_config(const nlohmann::json& cfg, const StableParams& params,
                            const SpaceGrid& grid);
FiniteMeasure measure_from_config(const nlohmann::json& mu_spec, const SpaceGrid& grid);

std::string field_to_csv(const ScalarField& f);

}  // namespace kp
