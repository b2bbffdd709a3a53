#pragma once

#include <utility>

#include "grid.hpp"

namespace kp {

// Isotropic alpha-stable semigroup parameters; alpha strictly inside (0, 2).
struct StableParams {
    double alpha = 1.0;
    int dim = 1;
};

StableParams make_stable_params(double alpha, int dim);

struct StableDensitySlice {
    StableParams params;
    double t = 1.0;
    ScalarField field;
    // Mass of the density outside the grid box [-L, L)^d, i.e. what the
    // truncation to the torus cannot represent pointwise.
    double truncation_mass = 0.0;
    // Wrap-around diagnostic: mass outside [-L/2, L/2]^d.
    double half_box_mass = 0.0;
    double clamp_tolerance = 0.0;
};

// Pointwise evaluation of the density p_t (inverse Fourier transform of
// u -> exp(-t|u|^alpha)) on the lattice. The dual lattice is oversampled by
// `pad` (a power of two; 0 selects a default per dimension) so that the
// evaluation approximates the free-space density rather than its 2L-periodic
// wrap; tiny spectral-ringing negatives are clamped to zero.
StableDensitySlice stable_density_grid(const StableParams& params, const SpaceGrid& grid, double t,
                                       int pad = 0);

// Samples of the exact 2L-periodization sum_m p_t(x + 2Lm), computed by
// folding the Fourier multiplier onto the coarse dual lattice. This is the
// flavor used to assemble transition kernels: periodic convolution composes
// these slices exactly up to spectral folding.
ScalarField stable_density_periodized(const StableParams& params, const SpaceGrid& grid, double t);

// Band-limited flavor: the multiplier sampled on the coarse dual lattice with
// no frequency folding. Slices of this family compose exactly under periodic
// convolution at every lag (spectra multiply), at the price of ringing
// negatives when t is too small for the lattice to resolve; no clamping is
// applied here.
ScalarField stable_density_band_limited(const StableParams& params, const SpaceGrid& grid,
                                        double t);

// max over the lattice of |p_t(x) - t^{-d/alpha} p_1(t^{-1/alpha} x)|, the
// right side evaluated on the rescaled grid with the same layout.
double scaling_defect(const StableParams& params, const SpaceGrid& grid, double t, int pad = 0);

struct SharpBoundRatio {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    // Same statistics restricted to |x|_inf <= L/2 (the trusted window).
    double min_ratio_half_box = 0.0;
    double max_ratio_half_box = 0.0;
};

// Ratios p_t(x) / min(t^{-d/alpha}, t/|x|^{d+alpha}) over the lattice; the
// x = 0 point uses the left branch.
SharpBoundRatio sharp_bound_ratio(const StableParams& params, const SpaceGrid& grid, double t,
                                  int pad = 0);
SharpBoundRatio sharp_bound_ratio(const StableDensitySlice& slice);

// Worst increase of the density along axis rays away from the origin;
// zero (up to clamp tolerance) for a correctly computed slice.
double radial_monotonicity_defect(const ScalarField& field);

int default_pad(int dim);

}  // namespace kp
