#pragma once

#include <optional>

#include "perturb.hpp"

namespace kp {

// Admissible jump class of the stable application: j(z,w) bounded by
// eps |w-z|^{-d-alpha}, regularized below the cutoff scale delta and
// truncated beyond half the torus width so the norm stays finite.
struct EpsilonJumpSpec {
    double epsilon = 0.0;
    double delta = 0.0;  // 0 selects one lattice spacing
};

JumpKernel make_epsilon_jump(const StableParams& params, const SpaceGrid& grid,
                             const EpsilonJumpSpec& spec);

// Worst positive part of (K_1 - (eta + c (t-s)) K) / K over the support.
double condition_defect(const ForwardKernel& k, const JumpKernel& j, double eta, double c);

// Smallness seen in the short-time regime t - s <= |y - x|^alpha, where the
// time budget c (t-s) cannot hide the jump contribution. Scales linearly in
// the jump amplitude; reported by the epsilon scan.
double short_time_eta(const ForwardKernel& k, const JumpKernel& j, double alpha);

struct Corollary52Result {
    // oriented comparisons (the certified inequalities)
    double upper_vs_envelope = 0.0;  // max ptilde / (p * (1/(1-eta))^{1+c dt/eta}), <= 1
    double signed_vs_base = 0.0;     // max ptilde-minus / p, <= 1
    double signed_vs_lower = 0.0;    // min ptilde-minus / (p * lower bound), >= 1
    // raw extreme ratios (all exactly 1 when the jump vanishes)
    double max_plus_over_base = 0.0;
    double max_minus_over_base = 0.0;
    double min_minus_over_base = 0.0;
};

Corollary52Result corollary52_check(const ForwardKernel& base, const PerturbedKernel& plus,
                                    const PerturbedKernel& minus, double eta, double c);

// Smooth compactly supported test function phi(t, y) = psi(t) g(y); both
// factors are C-infinity bumps, g supported strictly inside [-L/2, L/2]^d and
// psi vanishing on the two outermost nodes at each end of the time grid.
struct FractionalTestFunction {
    TimeGrid tgrid;
    SpaceGrid sgrid;
    std::vector<double> time_profile;  // psi at each node
    ScalarField space_profile;         // g, position layout
};

FractionalTestFunction make_test_bump(const TimeGrid& tg, const SpaceGrid& sg,
                                      const std::vector<double>& center_x, double width_x,
                                      double center_t, double width_t);

// Fourier multiplier -|u|^alpha applied on the torus lattice.
ScalarField fractional_laplacian(const ScalarField& phi, double alpha);

// Weak-form residual | int int K(s,x,t,y) [d_t phi + Lap^{a/2} phi + J phi](t,y) dy dt
// + phi(s, x) | at a grid node (s_node, x_idx). Pass j = nullptr for the
// unperturbed generator.
double fundamental_solution_residual(const ForwardKernel& kernel, const JumpKernel* j,
                                     const FractionalTestFunction& phi, double alpha, int s_node,
                                     std::int64_t x_idx);

}  // namespace kp
