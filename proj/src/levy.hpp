#pragma once

#include <cstdint>
#include <optional>

#include "kernel.hpp"
#include "stable.hpp"

namespace kp {

// Finite measure on the displacement lattice (offset layout: index 0 is the
// zero displacement). Weights are cell masses, not densities.
struct FiniteMeasure {
    SpaceGrid sgrid;
    std::vector<double> weights;

    double total_mass() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

FiniteMeasure make_point_measure(const SpaceGrid& g, double mass);
// Gaussian profile binned to the lattice and normalized to `mass`.
FiniteMeasure bin_gaussian(const SpaceGrid& g, double mass, double sigma);
// Uniform measure on the centered ball of the given radius.
FiniteMeasure bin_uniform_ball(const SpaceGrid& g, double mass, double radius);

// Levy measure of the isotropic alpha-stable process, c |z|^{-d-alpha} dz,
// binned per cell with the singular cell regularized at one lattice spacing
// (an underestimate, so nu - mu >= 0 checks stay conservative).
FiniteMeasure stable_levy_measure(const StableParams& params, const SpaceGrid& g);

// jump kernel J(s,x,dt dy) = mu(dy - x) delta_s(dt): intensity density is the
// cell mass divided by the cell volume
JumpKernel jump_from_measure(const FiniteMeasure& mu);

// mu^{*n} with the total mass pinned to |mu|^n exactly.
FiniteMeasure convolution_power(const FiniteMeasure& mu, int n);

struct LevyKernelSpec {
    StableParams params;
    SpaceGrid grid;
    FiniteMeasure mu;
    std::optional<FiniteMeasure> nu;         // jump intensity of the base process
    std::optional<ScalarField> rho_override; // explicit distribution of X_tau
};

// Distribution slice rho_tau of the base process on the torus.
ScalarField levy_base_slice(const LevyKernelSpec& spec, double tau);

// rho_tau * sum_{n<=N} tau^n mu^{*n} / n!, the jump-adding perturbation in
// closed form; N is chosen so the Poisson remainder is below rel_tol
// relative to e^{tau |mu|}. Total mass e^{tau|mu|} within rel_tol.
ScalarField meyer_add(const LevyKernelSpec& spec, double tau, double rel_tol);

// e^{-tau mu_mass} * field: the transition probability normalization.
ScalarField meyer_normalize(const ScalarField& field, double tau, double mu_mass);

// Alternating series rho_tau * sum (-tau)^n mu^{*n} / n!; requires nu - mu >= 0
// cellwise. Mass e^{-tau|mu|} within rel_tol.
ScalarField meyer_remove(const LevyKernelSpec& spec, double tau, double rel_tol);

int poisson_truncation_index(double lambda, double rel_tol);

// --- sampling -------------------------------------------------------------

// Counter-based deterministic stream: value sequence depends only on
// (seed, block, lane), never on scheduling.
struct RngStream {
    std::uint64_t state;

    explicit RngStream(std::uint64_t seed, std::uint64_t block = 0, std::uint64_t lane = 0);
    std::uint64_t next_u64();
    double next_unit();         // (0, 1)
    double next_exponential();  // Exp(1)
    double next_normal();       // N(0, 1)
};

// Symmetric alpha-stable increment with characteristic function
// exp(-t |u|^alpha), via the Chambers-Mallows-Stuck transform (d = 1) or a
// subordinated Gaussian (d >= 2, Kanter's positive-stable sampler).
void sample_stable_increment(const StableParams& params, double t, RngStream& rng, double* out);

// Positive strictly stable variate with Laplace transform exp(-lambda^a),
// 0 < a < 1.
double sample_positive_stable(double a, RngStream& rng);

struct MonteCarloResult {
    ScalarField histogram;  // empirical density on the lattice
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
};

// Simulates X_tau + compound Poisson(tau, mu) started at x0, wraps to the
// torus, and bins on the lattice. Deterministic for fixed (seed, n_paths).
MonteCarloResult monte_carlo_oracle(const LevyKernelSpec& spec, double tau,
                                    const std::vector<double>& x0, std::int64_t n_paths,
                                    std::uint64_t seed);

}  // namespace kp
