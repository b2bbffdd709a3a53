#pragma once

#include <string>
#include <vector>

namespace kp {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string details;
};

struct SelftestReport {
    std::vector<CriterionResult> criteria;
    double wall_seconds = 0.0;
    bool all_passed = false;

    std::string to_json() const;
};

// Runs the full acceptance suite (criteria 1-15). Each criterion prints one
// pass/fail line to stdout when `verbose` is set.
SelftestReport run_selftest(bool verbose);

}  // namespace kp
