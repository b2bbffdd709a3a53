#include "stable.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "fft.hpp"

namespace kp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

// Multiplier exp(-t |u|^alpha) for the squared frequency norm.
inline double multiplier(double t, double alpha, double u2) {
    if (u2 == 0.0) return 1.0;
    return std::exp(-t * std::pow(u2, 0.5 * alpha));
}

void clamp_small_negatives(ScalarField& f, double& tol_out) {
    double mx = 0.0;
    for (double v : f.values) mx = std::max(mx, v);
    double tol = 1e-12 * mx;
    double worst = 0.0;
    for (double& v : f.values) {
        if (v < 0.0) {
            worst = std::max(worst, -v);
            if (-v > tol)
                throw aliasing_error("stable density: negative value beyond ringing tolerance; "
                                     "grid too coarse or too small");
            v = 0.0;
        }
    }
    (void)worst;
    tol_out = tol;
}

}  // namespace

int default_pad(int dim) { return dim == 1 ? 256 : 8; }

StableParams make_stable_params(double alpha, int dim) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 2.0, "stable: alpha must lie in (0, 2)");
    require(dim >= 1 && dim <= 3, "stable: dim must be in [1, 3]");
    return StableParams{alpha, dim};
}

StableDensitySlice stable_density_grid(const StableParams& params, const SpaceGrid& grid, double t,
                                       int pad) {
    require(std::isfinite(t) && t > 0.0, "stable density: t must be positive");
    require(grid.dim == params.dim, "stable density: grid dimension mismatch");
    if (pad == 0) pad = default_pad(params.dim);
    require(is_pow2(pad), "stable density: pad must be a power of two");

    const int n = grid.n_per_dim;
    const int N = n * pad;
    const double L = grid.half_width;
    const double P = 2.0 * L * pad;  // oversampled period
    const double du = 2.0 * kPi / P;
    const int d = grid.dim;

    std::vector<int> dims(d, N);
    std::int64_t total = 1;
    for (int k = 0; k < d; ++k) total *= N;

    std::vector<std::complex<double>> F(static_cast<std::size_t>(total));
    const double alpha = params.alpha;
    parallel_for(total, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<int> mi(d);
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            std::int64_t rem = idx;
            int ksum = 0;
            double u2 = 0.0;
            for (int k = d - 1; k >= 0; --k) {
                int kk = static_cast<int>(rem % N);
                rem /= N;
                int ks = kk < N / 2 ? kk : kk - N;
                ksum += kk;
                double u = ks * du;
                u2 += u * u;
            }
            double g = multiplier(t, alpha, u2);
            // (-1)^{k} phase shifts the origin to the box center.
            F[static_cast<std::size_t>(idx)] = (ksum & 1) ? -g : g;
        }
    });

    fft::transform(F, dims, +1);

    StableDensitySlice slice;
    slice.params = params;
    slice.t = t;
    slice.field = ScalarField(grid);

    const double scale = 1.0 / std::pow(P, d);
    const int q0 = n * (pad - 1) / 2;
    const std::int64_t npts = grid.size();
    std::vector<int> mi(d);
    for (std::int64_t i = 0; i < npts; ++i) {
        grid.unflatten(i, mi.data());
        std::int64_t big = 0;
        for (int k = 0; k < d; ++k) big = big * N + (q0 + mi[k]);
        slice.field.values[static_cast<std::size_t>(i)] =
            F[static_cast<std::size_t>(big)].real() * scale;
    }

    clamp_small_negatives(slice.field, slice.clamp_tolerance);
    slice.truncation_mass = std::max(0.0, 1.0 - integrate(slice.field));
    slice.half_box_mass = slice.truncation_mass + mass_outside_half_box(slice.field);
    return slice;
}

namespace {
enum class SliceFlavor { periodized, band_limited };
}

static ScalarField stable_density_from_multiplier(const StableParams& params,
                                                  const SpaceGrid& grid, double t,
                                                  SliceFlavor flavor) {
    require(std::isfinite(t) && t > 0.0, "stable density: t must be positive");
    require(grid.dim == params.dim, "stable density: grid dimension mismatch");
    const int n = grid.n_per_dim;
    const double L = grid.half_width;
    const double du = kPi / L;
    const double two_umax = n * du;  // frequency period of the sampled lattice
    const int d = grid.dim;
    const double alpha = params.alpha;

    std::vector<int> dims(d, n);
    std::int64_t total = grid.size();
    std::vector<std::complex<double>> F(static_cast<std::size_t>(total));

    // Fold the multiplier over the dual-lattice images; adaptive cutoff. A
    // fold that does not converge within the image budget means the lattice
    // cannot resolve the multiplier (t far below the resolvable scale), and
    // silently truncating it would inflate the slice mass.
    auto folded = [&](const std::vector<double>& u) {
        double acc = 0.0;
        if (flavor == SliceFlavor::band_limited) {
            double u2 = 0.0;
            for (int k = 0; k < d; ++k) u2 += u[k] * u[k];
            return multiplier(t, alpha, u2);
        }
        if (d == 1) {
            acc = multiplier(t, alpha, u[0] * u[0]);
            bool converged = false;
            for (int m = 1; m < 100000; ++m) {
                double a = u[0] + m * two_umax, b = u[0] - m * two_umax;
                double term = multiplier(t, alpha, a * a) + multiplier(t, alpha, b * b);
                acc += term;
                if (term < 1e-18 * acc) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw aliasing_error(
                    "stable density: frequency fold does not converge; grid too coarse or t too "
                    "small");
        } else {
            for (int ring = 0;; ++ring) {
                double ring_max = 0.0;
                // iterate lattice vectors with Chebyshev norm == ring
                std::vector<int> m(d, -ring);
                while (true) {
                    int cheb = 0;
                    for (int k = 0; k < d; ++k) cheb = std::max(cheb, std::abs(m[k]));
                    if (cheb == ring) {
                        double u2 = 0.0;
                        for (int k = 0; k < d; ++k) {
                            double uu = u[k] + m[k] * two_umax;
                            u2 += uu * uu;
                        }
                        double term = multiplier(t, alpha, u2);
                        acc += term;
                        ring_max = std::max(ring_max, term);
                    }
                    int k = d - 1;
                    while (k >= 0 && m[k] == ring) m[k--] = -ring;
                    if (k < 0) break;
                    ++m[k];
                }
                if (ring > 0 && (ring_max < 1e-18 * acc || ring > 64)) break;
            }
        }
        return acc;
    };

    parallel_for(total, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<int> mi(d);
        std::vector<double> u(d);
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            grid.unflatten(idx, mi.data());
            int ksum = 0;
            for (int k = 0; k < d; ++k) {
                int kk = mi[k];
                int ks = kk < n / 2 ? kk : kk - n;
                ksum += kk;
                u[k] = ks * du;
            }
            double g = folded(u);
            F[static_cast<std::size_t>(idx)] = (ksum & 1) ? -g : g;
        }
    });

    fft::transform(F, dims, +1);

    ScalarField out(grid);
    const double scale = 1.0 / std::pow(2.0 * L, d);
    for (std::int64_t i = 0; i < total; ++i)
        out.values[static_cast<std::size_t>(i)] = F[static_cast<std::size_t>(i)].real() * scale;
    if (flavor == SliceFlavor::periodized) {
        double tol;
        clamp_small_negatives(out, tol);
    }
    return out;
}

ScalarField stable_density_periodized(const StableParams& params, const SpaceGrid& grid,
                                      double t) {
    return stable_density_from_multiplier(params, grid, t, SliceFlavor::periodized);
}

ScalarField stable_density_band_limited(const StableParams& params, const SpaceGrid& grid,
                                        double t) {
    return stable_density_from_multiplier(params, grid, t, SliceFlavor::band_limited);
}

double scaling_defect(const StableParams& params, const SpaceGrid& grid, double t, int pad) {
    require(t > 0.0, "scaling defect: t must be positive");
    if (pad == 0) pad = default_pad(params.dim);
    StableDensitySlice left = stable_density_grid(params, grid, t, pad);
    if (t == 1.0) {
        // identity at t = 1 by definition
        return 0.0;
    }
    const double r = std::pow(t, -1.0 / params.alpha);
    SpaceGrid rescaled = grid;
    rescaled.half_width = grid.half_width * r;
    StableDensitySlice right = stable_density_grid(params, rescaled, 1.0, pad);
    const double amp = std::pow(t, -static_cast<double>(params.dim) / params.alpha);
    double defect = 0.0;
    for (std::size_t i = 0; i < left.field.values.size(); ++i)
        defect = std::max(defect, std::abs(left.field.values[i] - amp * right.field.values[i]));
    return defect;
}

SharpBoundRatio sharp_bound_ratio(const StableDensitySlice& slice) {
    const SpaceGrid& grid = slice.field.grid;
    const double t = slice.t;
    const double d = slice.params.dim;
    const double alpha = slice.params.alpha;
    const double left_branch = std::pow(t, -d / alpha);
    SharpBoundRatio out;
    out.min_ratio = std::numeric_limits<double>::infinity();
    out.min_ratio_half_box = std::numeric_limits<double>::infinity();
    const double window = grid.half_width / 2.0;
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        double r = grid.point_norm(i);
        double envelope =
            r == 0.0 ? left_branch : std::min(left_branch, t / std::pow(r, d + alpha));
        double ratio = slice.field.values[static_cast<std::size_t>(i)] / envelope;
        out.min_ratio = std::min(out.min_ratio, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
        if (r <= window) {
            out.min_ratio_half_box = std::min(out.min_ratio_half_box, ratio);
            out.max_ratio_half_box = std::max(out.max_ratio_half_box, ratio);
        }
    }
    return out;
}

SharpBoundRatio sharp_bound_ratio(const StableParams& params, const SpaceGrid& grid, double t,
                                  int pad) {
    return sharp_bound_ratio(stable_density_grid(params, grid, t, pad));
}

double radial_monotonicity_defect(const ScalarField& field) {
    const SpaceGrid& grid = field.grid;
    const int n = grid.n_per_dim;
    const int d = grid.dim;
    double defect = 0.0;
    std::vector<int> mi(d, n / 2);  // origin
    for (int axis = 0; axis < d; ++axis) {
        for (int dir : {+1, -1}) {
            std::vector<int> cur = mi;
            double running_min = field.values[static_cast<std::size_t>(grid.flatten(cur.data()))];
            // walk from the origin to the torus edge along this axis
            for (int step = 1; step <= n / 2; ++step) {
                int idx = n / 2 + dir * step;
                if (idx < 0 || idx >= n) break;
                cur[axis] = idx;
                double v = field.values[static_cast<std::size_t>(grid.flatten(cur.data()))];
                defect = std::max(defect, v - running_min);
                running_min = std::min(running_min, v);
            }
        }
    }
    return defect;
}

}  // namespace kp
