#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grid.hpp"
#include "stable.hpp"

namespace kp {

// Instantaneous spatial jump kernel J(s,x,dt dy) = j(x,y) delta_s(dt) dy.
// j is stored either as a translation-invariant profile j(y - x) in offset
// layout (FFT-composable) or as a full matrix (small grids only).
struct JumpKernel {
    SpaceGrid sgrid;
    bool translation_invariant = true;
    std::vector<double> profile;  // offset layout, size n^d
    std::vector<double> matrix;   // [x * size + y], size n^{2d}

    bool is_zero() const;
    double value(std::int64_t x, std::int64_t y) const {
        return translation_invariant
                   ? profile[static_cast<std::size_t>(sgrid.offset_index(x, y))]
                   : matrix[static_cast<std::size_t>(x * sgrid.size() + y)];
    }
};

JumpKernel make_jump_profile(const SpaceGrid& g, std::vector<double> profile_offsets);
JumpKernel make_jump_matrix(const SpaceGrid& g, std::vector<double> matrix);
JumpKernel make_zero_jump(const SpaceGrid& g);
// delta-like identity jump: 1/cell_volume at offset zero
JumpKernel make_identity_jump(const SpaceGrid& g);

// max(sup_z int j(z,w) dw, sup_w int j(z,w) dz)
double j_norm(const JumpKernel& j);

// Forward space-time kernel density on the grid: vanishes for j <= i, all
// entries nonnegative. The stationary representation stores one offset-layout
// density slice per positive time lag; the dense representation stores the
// full tensor (small grids only).
struct ForwardKernel {
    enum class Rep { dense, stationary };

    TimeGrid tgrid;
    SpaceGrid sgrid;
    Rep rep = Rep::stationary;
    // True when the kernel is a transition family whose slices approach the
    // identity at zero lag (rho_0 = delta). This activates the endpoint terms
    // of the trapezoid time rule in the perturbation series.
    bool transition_limits = false;

    // stationary: slices[l-1] = rho(lag l), l = 1..n_steps, offset layout
    std::vector<std::vector<double>> slices;
    // dense: data[((i*S + x)*T + j)*S + y], T = n_nodes, S = spatial size
    std::vector<double> dense;

    std::int64_t spatial_size() const { return sgrid.size(); }
    int n_lags() const { return tgrid.n_steps; }

    double value(int i, std::int64_t x, int j, std::int64_t y) const {
        if (j <= i) return 0.0;
        if (rep == Rep::stationary)
            return slices[static_cast<std::size_t>(j - i - 1)]
                         [static_cast<std::size_t>(sgrid.offset_index(x, y))];
        std::int64_t S = sgrid.size();
        std::int64_t T = tgrid.n_nodes();
        return dense[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)];
    }

    bool is_zero() const;
    double max_abs() const;
};

ForwardKernel make_zero_kernel(const TimeGrid& tg, const SpaceGrid& sg, ForwardKernel::Rep rep);
ForwardKernel make_stationary_kernel(const TimeGrid& tg, const SpaceGrid& sg,
                                     std::vector<std::vector<double>> lag_slices,
                                     bool transition_limits);
ForwardKernel make_dense_kernel(const TimeGrid& tg, const SpaceGrid& sg,
                                std::vector<double> data, bool transition_limits = false);

// Stationary alpha-stable transition kernel: slices are samples of the exact
// 2L-periodization of p_t, so periodic convolution composes them cleanly.
// `with_transition_limits` picks the time rule of the series algebra built on
// top: endpoint terms on (transition quadrature, closes Chapman-Kolmogorov
// and the Levy closed forms) or off (node algebra, the series bounds of the
// smallness certificate hold exactly).
enum class StableSliceFlavor {
    periodized,    // exact torus periodization; carries honest quadrature defects
    band_limited,  // sampled multiplier; composes exactly at every lag
};

ForwardKernel make_stable_kernel(const StableParams& params, const TimeGrid& tg,
                                 const SpaceGrid& sg, bool with_transition_limits = true,
                                 StableSliceFlavor flavor = StableSliceFlavor::periodized);

ForwardKernel expand_to_dense(const ForwardKernel& k);

// Composition (K o Kp)(s,x,A) = int K(s,x,du dz) Kp(u,z,A): the time integral
// uses the left-endpoint rule over the nodes strictly inside (s, t); forward
// kernels vanish at the endpoints so those nodes carry nothing.
ForwardKernel compose(const ForwardKernel& a, const ForwardKernel& b);

// (KJ)(i,x,j,y) = int K(i,x,j,dz) j(z,y): jump applied at the arrival time.
ForwardKernel apply_jump(const ForwardKernel& k, const JumpKernel& j);

// (JK)(i,x,j,y) = int j(x,dz) K(i,z,j,y): jump applied at the start time.
// This is the left endpoint limit needed by the trapezoid series rule.
ForwardKernel jump_then(const JumpKernel& j, const ForwardKernel& k);

// K_1 = K J K with the same time rule as the perturbation series.
ForwardKernel kjk(const ForwardKernel& k, const JumpKernel& j);

// Entrywise helpers.
ForwardKernel axpy(double a, const ForwardKernel& x, const ForwardKernel& y);  // a*x + y
ForwardKernel scale(double a, const ForwardKernel& x);
double max_entry_diff(const ForwardKernel& a, const ForwardKernel& b);
double max_relative_diff(const ForwardKernel& a, const ForwardKernel& b, double floor);

// Flat binary serialization (little-endian doubles) for CLI caching.
void save_kernel(const ForwardKernel& k, const std::string& path);
ForwardKernel load_kernel(const std::string& path);

void check_same_grids(const ForwardKernel& a, const ForwardKernel& b);

}  // namespace kp
