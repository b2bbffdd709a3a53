#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kp {

// Error taxonomy used across the library. Each maps 1:1 onto a C API status.
struct invalid_argument_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct precondition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct no_convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct unsupported_perturbation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct aliasing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_argument_error(msg);
}

// Global worker count for parallel loops (0 = hardware concurrency).
int thread_count();
void set_thread_count(int n);

// Chunked parallel loop. Each index is processed exactly once; writers must
// touch disjoint state per index so results do not depend on the schedule.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

inline const char* version_string() { return "1.0.0"; }

}  // namespace kp
