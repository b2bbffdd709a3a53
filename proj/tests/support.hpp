#pragma once

// Shared instance builders for tests.

#include <cmath>
#include <random>
#include <vector>

#include "fft.hpp"
#include "kernel.hpp"
#include "perturb.hpp"

namespace testkit {

// Exact discrete semigroup on the torus: slices are convolution powers of a
// positive one-step density, so the Chapman-Kolmogorov identity holds to
// machine precision by construction.
inline kp::ForwardKernel toy_semigroup(const kp::TimeGrid& tg, const kp::SpaceGrid& sg,
                                       double width = 1.0) {
    std::vector<double> step(static_cast<std::size_t>(sg.size()), 0.0);
    for (std::int64_t o = 0; o < sg.size(); ++o) {
        double w = sg.offset_norm(o);
        step[static_cast<std::size_t>(o)] = std::exp(-w * w / (width * width));
    }
    double mass = 0.0;
    for (double v : step) mass += v * sg.cell_volume();
    for (double& v : step) v /= mass;
    std::vector<std::vector<double>> slices;
    std::vector<double> cur = step;
    for (int l = 1; l <= tg.n_steps; ++l) {
        slices.push_back(cur);
        auto nxt = kp::fft::circular_convolve(cur, step, sg.dims());
        for (double& v : nxt) v *= sg.cell_volume();
        cur = nxt;
    }
    return kp::make_stationary_kernel(tg, sg, std::move(slices), /*transition_limits=*/true);
}

// Truncated power-law jump profile eps * max(|w|, delta)^{-d-alpha}, cut off
// beyond half the torus width.
inline kp::JumpKernel eps_jump(const kp::SpaceGrid& sg, double alpha, double eps, double delta) {
    std::vector<double> prof(static_cast<std::size_t>(sg.size()), 0.0);
    for (std::int64_t o = 0; o < sg.size(); ++o) {
        double w = sg.offset_norm(o);
        if (w > sg.half_width / 2.0) continue;
        prof[static_cast<std::size_t>(o)] =
            eps * std::pow(std::max(w, delta), -(sg.dim + alpha));
    }
    return kp::make_jump_profile(sg, prof);
}

inline kp::ForwardKernel random_dense_kernel(const kp::TimeGrid& tg, const kp::SpaceGrid& sg,
                                             unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::int64_t S = sg.size();
    const int T = tg.n_nodes();
    std::vector<double> data(static_cast<std::size_t>(T * S * T * S), 0.0);
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j)
            for (std::int64_t x = 0; x < S; ++x)
                for (std::int64_t y = 0; y < S; ++y)
                    data[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)] = u(rng);
    return kp::make_dense_kernel(tg, sg, data);
}

inline std::vector<double> random_jump_matrix(const kp::SpaceGrid& sg, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(static_cast<std::size_t>(sg.size() * sg.size()));
    for (auto& v : m) v = u(rng);
    return m;
}

}  // namespace testkit
