#include "levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"

namespace kp {

namespace {

constexpr double kPi = std::numbers::pi;

void normalize_mass(std::vector<double>& w, double target) {
    double s = 0.0;
    for (double v : w) s += v;
    if (s <= 0.0) {
        require(target == 0.0, "measure binning: empty support with positive mass");
        return;
    }
    double f = target / s;
    for (double& v : w) v *= f;
}

}  // namespace

FiniteMeasure make_point_measure(const SpaceGrid& g, double mass) {
    require(mass >= 0.0, "point measure: mass >= 0 required");
    FiniteMeasure mu;
    mu.sgrid = g;
    mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
    mu.weights[0] = mass;
    return mu;
}

FiniteMeasure bin_gaussian(const SpaceGrid& g, double mass, double sigma) {
    require(mass >= 0.0 && sigma > 0.0, "gaussian binning: mass >= 0 and sigma > 0 required");
    FiniteMeasure mu;
    mu.sgrid = g;
    mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
    for (std::int64_t o = 0; o < g.size(); ++o) {
        double w = g.offset_norm(o);
        mu.weights[static_cast<std::size_t>(o)] = std::exp(-0.5 * w * w / (sigma * sigma));
    }
    normalize_mass(mu.weights, mass);
    return mu;
}

FiniteMeasure bin_uniform_ball(const SpaceGrid& g, double mass, double radius) {
    require(mass >= 0.0 && radius > 0.0, "ball binning: mass >= 0 and radius > 0 required");
    FiniteMeasure mu;
    mu.sgrid = g;
    mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
    for (std::int64_t o = 0; o < g.size(); ++o)
        if (g.offset_norm(o) <= radius) mu.weights[static_cast<std::size_t>(o)] = 1.0;
    normalize_mass(mu.weights, mass);
    return mu;
}

FiniteMeasure stable_levy_measure(const StableParams& params, const SpaceGrid& g) {
    require(params.dim == g.dim, "levy measure: dimension mismatch");
    const double a = params.alpha;
    const double d = params.dim;
    const double c = a * std::pow(2.0, a - 1.0) * std::tgamma((d + a) / 2.0) /
                     (std::pow(kPi, d / 2.0) * std::tgamma(1.0 - a / 2.0));
    FiniteMeasure nu;
    nu.sgrid = g;
    nu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
    const double vol = g.cell_volume();
    const double h = g.spacing();
    for (std::int64_t o = 0; o < g.size(); ++o) {
        double w = std::max(g.offset_norm(o), h);
        nu.weights[static_cast<std::size_t>(o)] = c * std::pow(w, -(d + a)) * vol;
    }
    return nu;
}

JumpKernel jump_from_measure(const FiniteMeasure& mu) {
    std::vector<double> prof = mu.weights;
    const double inv_vol = 1.0 / mu.sgrid.cell_volume();
    for (double& v : prof) v *= inv_vol;
    return make_jump_profile(mu.sgrid, std::move(prof));
}

FiniteMeasure convolution_power(const FiniteMeasure& mu, int n) {
    require(n >= 0, "convolution power: n >= 0 required");
    const double mass = mu.total_mass();
    if (n == 0) return make_point_measure(mu.sgrid, 1.0);
    FiniteMeasure out = mu;
    const auto dims = mu.sgrid.dims();
    for (int k = 2; k <= n; ++k)
        out.weights = fft::circular_convolve(out.weights, mu.weights, dims);
    // pin the mass exactly; FFT rounding otherwise drifts at the 1e-15 level
    normalize_mass(out.weights, std::pow(mass, n));
    return out;
}

ScalarField levy_base_slice(const LevyKernelSpec& spec, double tau) {
    if (spec.rho_override) {
        require(spec.rho_override->grid == spec.grid, "levy spec: rho grid mismatch");
        return *spec.rho_override;
    }
    return stable_density_periodized(spec.params, spec.grid, tau);
}

int poisson_truncation_index(double lambda, double rel_tol) {
    require(lambda >= 0.0 && rel_tol > 0.0, "poisson truncation: bad arguments");
    const double target = rel_tol * std::exp(lambda);
    double partial = 0.0, term = 1.0;
    for (int n = 0; n <= 10000; ++n) {
        if (n > 0) term *= lambda / n;
        partial += term;
        if (std::exp(lambda) - partial <= target) return n;
    }
    throw no_convergence_error("poisson truncation: did not reach tolerance");
}

namespace {

ScalarField meyer_series(const LevyKernelSpec& spec, double tau, double rel_tol, double sign) {
    require(tau > 0.0, "meyer: tau > 0 required");
    require(rel_tol > 0.0, "meyer: rel_tol > 0 required");
    require(spec.mu.sgrid == spec.grid, "meyer: measure grid mismatch");

    ScalarField rho = levy_base_slice(spec, tau);
    const double mass = spec.mu.total_mass();
    if (mass == 0.0) return rho;

    const int N = poisson_truncation_index(tau * mass, rel_tol);
    const auto dims = spec.grid.dims();

    // sum_n (sign tau)^n mu^{*n} / n! accumulated as cell masses
    std::vector<double> acc(static_cast<std::size_t>(spec.grid.size()), 0.0);
    acc[0] = 1.0;  // n = 0: unit mass at zero displacement
    FiniteMeasure power = make_point_measure(spec.grid, 1.0);
    double coeff = 1.0;
    for (int n = 1; n <= N; ++n) {
        power.weights = fft::circular_convolve(power.weights, spec.mu.weights, dims);
        normalize_mass(power.weights, std::pow(mass, n));
        coeff *= sign * tau / n;
        for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += coeff * power.weights[q];
    }

    // density convolved with the displacement measure
    auto rho_off = position_to_offset(spec.grid, rho.values);
    auto conv = fft::circular_convolve(rho_off, acc, dims);
    ScalarField out(spec.grid);
    out.values = offset_to_position(spec.grid, conv);
    return out;
}

}  // namespace

ScalarField meyer_add(const LevyKernelSpec& spec, double tau, double rel_tol) {
    return meyer_series(spec, tau, rel_tol, +1.0);
}

ScalarField meyer_normalize(const ScalarField& field, double tau, double mu_mass) {
    require(tau > 0.0 && mu_mass >= 0.0, "meyer_normalize: bad arguments");
    ScalarField out = field;
    const double f = std::exp(-tau * mu_mass);
    for (double& v : out.values) v *= f;
    return out;
}

ScalarField meyer_remove(const LevyKernelSpec& spec, double tau, double rel_tol) {
    require(spec.nu.has_value(), "meyer_remove: spec must carry the base Levy measure nu");
    require(spec.nu->sgrid == spec.grid, "meyer_remove: nu grid mismatch");
    for (std::size_t q = 0; q < spec.mu.weights.size(); ++q)
        if (spec.nu->weights[q] < spec.mu.weights[q])
            throw precondition_error(
                "meyer_remove: nu - mu is negative somewhere; removing these jumps is not "
                "admissible");
    ScalarField out = meyer_series(spec, tau, rel_tol, -1.0);
    // alternating roundoff may leave harmless negatives of series-tail size
    double mx = 0.0;
    for (double v : out.values) mx = std::max(mx, v);
    const double tol = std::max(rel_tol, 1e-12) * std::max(mx, 1.0);
    for (double& v : out.values) {
        require(v >= -tol, "meyer_remove: negative values beyond tolerance");
        if (v < 0.0) v = 0.0;
    }
    return out;
}

// --- sampling ---------------------------------------------------------------

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t block, std::uint64_t lane) {
    // derive a well-separated state from the counters
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= block * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(s);
    s ^= lane * 0x9e3779b97f4a7c15ULL + 0x94d049bb133111ebULL;
    std::uint64_t c = splitmix64(s);
    state = a ^ (b * 0xff51afd7ed558ccdULL) ^ (c * 0xc4ceb9fe1a85ec53ULL);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state); }

double RngStream::next_unit() {
    // strictly inside (0,1) so logs and tangents stay finite
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::min(std::max(u, 0x1.0p-53), 1.0 - 0x1.0p-53);
}

double RngStream::next_exponential() { return -std::log(next_unit()); }

double RngStream::next_normal() {
    double u1 = next_unit(), u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double sample_positive_stable(double a, RngStream& rng) {
    require(a > 0.0 && a < 1.0, "positive stable: index must be in (0, 1)");
    // Kanter's representation: S = (A(U)/W)^{(1-a)/a} with U uniform(0, pi)
    const double u = rng.next_unit() * kPi;
    const double w = rng.next_exponential();
    const double A = std::sin((1.0 - a) * u) * std::pow(std::sin(a * u), a / (1.0 - a)) /
                     std::pow(std::sin(u), 1.0 / (1.0 - a));
    return std::pow(A / w, (1.0 - a) / a);
}

void sample_stable_increment(const StableParams& params, double t, RngStream& rng, double* out) {
    const double a = params.alpha;
    if (params.dim == 1) {
        // Chambers-Mallows-Stuck, symmetric case
        const double u = (rng.next_unit() - 0.5) * kPi;
        const double w = rng.next_exponential();
        double x;
        if (a == 1.0) {
            x = std::tan(u);
        } else {
            x = std::sin(a * u) / std::pow(std::cos(u), 1.0 / a) *
                std::pow(std::cos(u - a * u) / w, (1.0 - a) / a);
        }
        out[0] = std::pow(t, 1.0 / a) * x;
        return;
    }
    // isotropic d >= 2: Gaussian subordinated by a positive (a/2)-stable time
    const double s0 = sample_positive_stable(a / 2.0, rng);
    const double scale = std::sqrt(2.0 * std::pow(t, 2.0 / a) * s0);
    for (int k = 0; k < params.dim; ++k) out[k] = scale * rng.next_normal();
}

MonteCarloResult monte_carlo_oracle(const LevyKernelSpec& spec, double tau,
                                    const std::vector<double>& x0, std::int64_t n_paths,
                                    std::uint64_t seed) {
    require(tau > 0.0, "monte carlo: tau > 0 required");
    require(n_paths >= 1, "monte carlo: n_paths >= 1 required");
    require(static_cast<int>(x0.size()) == spec.grid.dim, "monte carlo: x0 dimension mismatch");

    const SpaceGrid& g = spec.grid;
    const int d = g.dim;
    const double L = g.half_width;
    const double h = g.spacing();
    const double mass = spec.mu.total_mass();
    const double lambda = tau * mass;

    // cumulative weights for inverse-CDF jump sampling on the flat lattice
    std::vector<double> cdf(spec.mu.weights.size());
    double run = 0.0;
    for (std::size_t q = 0; q < cdf.size(); ++q) {
        run += spec.mu.weights[q];
        cdf[q] = run;
    }

    constexpr std::int64_t kBlock = 1 << 16;
    const std::int64_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(n_blocks));

    parallel_for(n_blocks, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(static_cast<std::size_t>(d));
        std::vector<int> mi(static_cast<std::size_t>(d));
        std::vector<double> jump(static_cast<std::size_t>(d));
        for (std::int64_t blk = lo; blk < hi; ++blk) {
            auto& local = counts[static_cast<std::size_t>(blk)];
            local.assign(static_cast<std::size_t>(g.size()), 0);
            // separate lanes: base-process increments never share draws with
            // the jump part, so adding zero-size jumps leaves paths unchanged
            RngStream base(seed, static_cast<std::uint64_t>(blk), 0);
            RngStream jumps(seed, static_cast<std::uint64_t>(blk), 1);
            std::int64_t count = std::min<std::int64_t>(kBlock, n_paths - blk * kBlock);
            for (std::int64_t p = 0; p < count; ++p) {
                sample_stable_increment(spec.params, tau, base, x.data());
                for (int k = 0; k < d; ++k)
                    x[static_cast<std::size_t>(k)] += x0[static_cast<std::size_t>(k)];
                if (lambda > 0.0) {
                    // Poisson(lambda) by Knuth's product method
                    int njump = 0;
                    double prod = jumps.next_unit();
                    const double floor_l = std::exp(-lambda);
                    while (prod > floor_l) {
                        ++njump;
                        prod *= jumps.next_unit();
                    }
                    for (int jj = 0; jj < njump; ++jj) {
                        double target = jumps.next_unit() * mass;
                        auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
                        std::int64_t cell = it == cdf.end()
                                                ? static_cast<std::int64_t>(cdf.size()) - 1
                                                : static_cast<std::int64_t>(it - cdf.begin());
                        g.offset_displacement(cell, jump.data());
                        for (int k = 0; k < d; ++k)
                            x[static_cast<std::size_t>(k)] += jump[static_cast<std::size_t>(k)];
                    }
                }
                // wrap to the torus and bin into cells centered on the
                // lattice points (matching the midpoint quadrature)
                for (int k = 0; k < d; ++k) {
                    double v = std::fmod(x[static_cast<std::size_t>(k)] + L, 2.0 * L);
                    if (v < 0.0) v += 2.0 * L;
                    int idx = static_cast<int>(std::floor(v / h + 0.5)) % g.n_per_dim;
                    mi[static_cast<std::size_t>(k)] = idx;
                }
                ++local[static_cast<std::size_t>(g.flatten(mi.data()))];
            }
        }
    });

    MonteCarloResult res;
    res.histogram = ScalarField(g);
    res.n_paths = n_paths;
    res.seed = seed;
    const double norm = 1.0 / (static_cast<double>(n_paths) * g.cell_volume());
    for (const auto& local : counts)
        for (std::size_t q = 0; q < local.size(); ++q)
            res.histogram.values[q] += static_cast<double>(local[q]) * norm;
    return res;
}

}  // namespace kp
