#include "fft.hpp"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>

#include "common.hpp"

namespace kp::fft {

namespace {

// FFTW planning is not thread safe; execution via the new-array interface is.
// Plans are cached per (dims, sign) and created with FFTW_ESTIMATE so the
// input array contents are never touched during planning.
std::mutex g_plan_mutex;
std::map<std::pair<std::vector<int>, int>, fftw_plan>& plan_cache() {
    static std::map<std::pair<std::vector<int>, int>, fftw_plan> cache;
    return cache;
}

fftw_plan get_plan(const std::vector<int>& dims, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto key = std::make_pair(dims, sign);
    auto it = plan_cache().find(key);
    if (it != plan_cache().end()) return it->second;
    fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_cache()[key] = p;
    return p;
}

std::int64_t total_size(const std::vector<int>& dims) {
    std::int64_t n = 1;
    for (int d : dims) n *= d;
    return n;
}

}  // namespace

void transform(std::vector<std::complex<double>>& data, const std::vector<int>& dims, int sign) {
    require(!dims.empty(), "fft: empty dims");
    require(static_cast<std::int64_t>(data.size()) == total_size(dims), "fft: size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan p = get_plan(dims, sign, buf);
    fftw_execute_dft(p, buf, buf);
}

std::vector<double> circular_convolve(const std::vector<double>& a, const std::vector<double>& b,
                                      const std::vector<int>& dims) {
    std::int64_t n = total_size(dims);
    require(static_cast<std::int64_t>(a.size()) == n && static_cast<std::int64_t>(b.size()) == n,
            "circular_convolve: size mismatch");
    std::vector<std::complex<double>> fa(a.begin(), a.end()), fb(b.begin(), b.end());
    transform(fa, dims, -1);
    transform(fb, dims, -1);
    for (std::int64_t i = 0; i < n; ++i) fa[i] *= fb[i];
    transform(fa, dims, +1);
    std::vector<double> out(n);
    double scale = 1.0 / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) out[i] = fa[i].real() * scale;
    return out;
}

}  // namespace kp::fft
