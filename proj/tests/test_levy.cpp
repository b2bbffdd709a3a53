#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "levy.hpp"
#include "oracles.hpp"
#include "perturb.hpp"

using namespace kp;

namespace {

LevyKernelSpec cauchy_spec(const SpaceGrid& g, const FiniteMeasure& mu) {
    LevyKernelSpec spec;
    spec.params = make_stable_params(1.0, 1);
    spec.grid = g;
    spec.mu = mu;
    return spec;
}

}  // namespace

TEST_CASE("convolution powers") {
    SpaceGrid g = make_space_grid(1, 10.0, 64);

    SUBCASE("point mass stays a point mass") {
        FiniteMeasure mu = make_point_measure(g, 0.7);
        FiniteMeasure m3 = convolution_power(mu, 3);
        CHECK(m3.total_mass() == doctest::Approx(std::pow(0.7, 3)).epsilon(1e-14));
        CHECK(m3.weights[0] == doctest::Approx(std::pow(0.7, 3)).epsilon(1e-12));
        double off = 0.0;
        for (std::size_t q = 1; q < m3.weights.size(); ++q) off = std::max(off, std::abs(m3.weights[q]));
        CHECK(off < 1e-15);
    }

    SUBCASE("n = 0 is the unit mass at zero") {
        FiniteMeasure mu = bin_gaussian(g, 0.5, 2.0);
        FiniteMeasure m0 = convolution_power(mu, 0);
        CHECK(m0.total_mass() == 1.0);
        CHECK(m0.weights[0] == 1.0);
    }

    SUBCASE("two-cell uniform squares to a triangle") {
        FiniteMeasure mu;
        mu.sgrid = g;
        mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
        mu.weights[1] = 1.0;  // offset +h
        mu.weights[2] = 1.0;  // offset +2h
        FiniteMeasure m2 = convolution_power(mu, 2);
        CHECK(m2.total_mass() == doctest::Approx(4.0).epsilon(1e-13));
        CHECK(m2.weights[2] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m2.weights[3] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(m2.weights[4] == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(convolution_power(make_point_measure(g, 1.0), -1), invalid_argument_error);
}

TEST_CASE("meyer mass laws") {
    SpaceGrid g = make_space_grid(1, 50.0, 2048);
    for (double tau : {0.5, 1.0, 2.0}) {
        for (double mass : {0.25, 0.5}) {
            LevyKernelSpec spec = cauchy_spec(g, bin_gaussian(g, mass, 2.0));
            ScalarField rho = levy_base_slice(spec, tau);
            ScalarField added = meyer_add(spec, tau, 1e-10);
            double ratio = integrate(added) / integrate(rho);
            CAPTURE(tau);
            CAPTURE(mass);
            CHECK(std::abs(ratio - std::exp(tau * mass)) < 1e-8);

            ScalarField normalized = meyer_normalize(added, tau, mass);
            CHECK(std::abs(integrate(normalized) - 1.0) < 1e-8);

            // monotone: adding jumps only adds mass pointwise
            double worst = 0.0;
            for (std::size_t q = 0; q < rho.values.size(); ++q)
                worst = std::min(worst, added.values[q] - rho.values[q]);
            CHECK(worst >= -1e-15);
        }
    }
    // frozen values
    CHECK(std::exp(1.0 * 0.5) == doctest::Approx(1.6487212707001282).epsilon(1e-15));
    CHECK(std::exp(-2.0 * 0.25) == doctest::Approx(0.60653065971263342).epsilon(1e-15));
}

TEST_CASE("meyer_add with zero measure returns the base slice") {
    SpaceGrid g = make_space_grid(1, 50.0, 512);
    LevyKernelSpec spec = cauchy_spec(g, make_point_measure(g, 0.0));
    ScalarField rho = levy_base_slice(spec, 1.0);
    ScalarField out = meyer_add(spec, 1.0, 1e-10);
    for (std::size_t q = 0; q < rho.values.size(); ++q) CHECK(out.values[q] == rho.values[q]);
}

TEST_CASE("meyer_remove: sandwich, mass, and precondition") {
    SpaceGrid g = make_space_grid(1, 50.0, 2048);
    StableParams p = make_stable_params(1.0, 1);
    FiniteMeasure nu = stable_levy_measure(p, g);

    // a removable mu: a small fraction of nu restricted to moderate radii
    FiniteMeasure mu;
    mu.sgrid = g;
    mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
    for (std::int64_t o = 0; o < g.size(); ++o) {
        double w = g.offset_norm(o);
        if (w >= 1.0 && w <= 10.0) mu.weights[static_cast<std::size_t>(o)] =
            0.5 * nu.weights[static_cast<std::size_t>(o)];
    }
    double mass = mu.total_mass();
    REQUIRE(mass > 0.01);

    LevyKernelSpec spec = cauchy_spec(g, mu);
    spec.nu = nu;
    double tau = 2.0;
    ScalarField removed = meyer_remove(spec, tau, 1e-10);
    ScalarField rho = levy_base_slice(spec, tau);
    CHECK(std::abs(integrate(removed) / integrate(rho) - std::exp(-tau * mass)) < 1e-8);
    for (std::size_t q = 0; q < removed.values.size(); ++q) {
        CHECK(removed.values[q] >= 0.0);
        CHECK(removed.values[q] <= rho.values[q] * (1.0 + 1e-12) + 1e-15);
    }

    // precondition: mu exceeding nu somewhere is rejected
    FiniteMeasure bad = bin_gaussian(g, 5.0, 20.0);
    LevyKernelSpec spec_bad = cauchy_spec(g, bad);
    spec_bad.nu = nu;
    CHECK_THROWS_AS(meyer_remove(spec_bad, 1.0, 1e-10), precondition_error);
}

TEST_CASE("two-path agreement with the perturbation series") {
    SpaceGrid g = make_space_grid(1, 50.0, 1024);
    double tau = 1.0;
    FiniteMeasure mu = bin_gaussian(g, 0.5, 2.0);
    LevyKernelSpec spec = cauchy_spec(g, mu);

    ScalarField direct = meyer_add(spec, tau, 1e-12);

    // band-limited slices compose exactly at every lag; the remaining error
    // is the dt^2 trapezoid residual of the higher series terms
    TimeGrid tg = make_time_grid(0.0, tau, 64);
    ForwardKernel K = make_stable_kernel(spec.params, tg, g, true,
                                         StableSliceFlavor::band_limited);
    JumpKernel j = jump_from_measure(mu);
    // eta = 0, c = |mu| certifies K J K <= c (t-s) K on a transition kernel
    PerturbedKernel P = perturbation_series(K, j, make_linear_q(mu.total_mass()), 0.0, 1e-12);

    auto series_slice = offset_to_position(g, P.series_sum.slices.back());
    double sup = 0.0, worst = 0.0;
    for (std::size_t q = 0; q < direct.values.size(); ++q) {
        sup = std::max(sup, direct.values[q]);
        worst = std::max(worst, std::abs(series_slice[q] - direct.values[q]));
    }
    CHECK(worst < 1e-6 * sup);
    CHECK(worst < 1e-6);
}

TEST_CASE("normalized kernels satisfy the semigroup property") {
    SpaceGrid g = make_space_grid(1, 50.0, 2048);
    FiniteMeasure mu = bin_gaussian(g, 0.5, 2.0);
    double mass = mu.total_mass();
    LevyKernelSpec spec = cauchy_spec(g, mu);

    auto normalized = [&](double tau) {
        return meyer_normalize(meyer_add(spec, tau, 1e-12), tau, mass);
    };
    ScalarField a = normalized(0.5), b = normalized(0.7), c = normalized(1.2);
    auto ao = position_to_offset(g, a.values);
    auto bo = position_to_offset(g, b.values);
    auto co = position_to_offset(g, c.values);
    auto conv = kp::fft::circular_convolve(ao, bo, g.dims());
    double vol = g.cell_volume();
    double sup = *std::max_element(co.begin(), co.end());
    double worst = 0.0;
    for (std::size_t q = 0; q < conv.size(); ++q)
        worst = std::max(worst, std::abs(conv[q] * vol - co[q]));
    CHECK(worst < 1e-9 * sup);
}

TEST_CASE("stable samplers are deterministic and correct") {
    SUBCASE("positive stable has the right Laplace transform") {
        // E exp(-S) = exp(-1) for the standard positive a-stable
        for (double a : {0.25, 0.5, 0.75}) {
            RngStream rng(12345);
            double acc = 0.0;
            const int n = 400000;
            for (int i = 0; i < n; ++i) acc += std::exp(-sample_positive_stable(a, rng));
            CAPTURE(a);
            CHECK(std::abs(acc / n - std::exp(-1.0)) < 3e-3);
        }
    }

    SUBCASE("CMS at alpha = 1 is Cauchy and deterministic") {
        StableParams p = make_stable_params(1.0, 1);
        RngStream r1(7, 3, 0), r2(7, 3, 0);
        double x1, x2;
        sample_stable_increment(p, 2.0, r1, &x1);
        sample_stable_increment(p, 2.0, r2, &x2);
        CHECK(x1 == x2);
    }
}

TEST_CASE("monte carlo matches the Cauchy law with no jumps") {
    SpaceGrid g = make_space_grid(1, 50.0, 512);
    LevyKernelSpec spec = cauchy_spec(g, make_point_measure(g, 0.0));
    auto res = monte_carlo_oracle(spec, 1.0, {0.0}, 1000000, 42);
    double sup = 0.0, worst = 0.0;
    double x;
    for (std::int64_t i = 0; i < g.size(); ++i) {
        g.point(i, &x);
        double ref = oracle::cauchy_periodized(1.0, x, 50.0);
        sup = std::max(sup, ref);
        worst = std::max(worst, std::abs(res.histogram.values[static_cast<std::size_t>(i)] - ref));
    }
    CHECK(worst < 0.05 * sup);
}

TEST_CASE("zero-size jumps leave the sampled law unchanged bitwise") {
    SpaceGrid g = make_space_grid(1, 50.0, 256);
    LevyKernelSpec none = cauchy_spec(g, make_point_measure(g, 0.0));
    LevyKernelSpec at_zero = cauchy_spec(g, make_point_measure(g, 0.4));
    auto a = monte_carlo_oracle(none, 1.0, {0.0}, 200000, 99);
    auto b = monte_carlo_oracle(at_zero, 1.0, {0.0}, 200000, 99);
    for (std::size_t q = 0; q < a.histogram.values.size(); ++q)
        CHECK(a.histogram.values[q] == b.histogram.values[q]);
}

TEST_CASE("monte carlo cross-validates the normalized meyer kernel") {
    SpaceGrid g = make_space_grid(1, 50.0, 512);
    FiniteMeasure mu = bin_gaussian(g, 0.5, 2.0);
    LevyKernelSpec spec = cauchy_spec(g, mu);
    double tau = 1.0;
    ScalarField analytic = meyer_normalize(meyer_add(spec, tau, 1e-10), tau, mu.total_mass());
    auto res = monte_carlo_oracle(spec, tau, {0.0}, 1000000, 2024);
    double sup = *std::max_element(analytic.values.begin(), analytic.values.end());
    double worst = 0.0;
    for (std::size_t q = 0; q < analytic.values.size(); ++q)
        worst = std::max(worst, std::abs(res.histogram.values[q] - analytic.values[q]));
    CHECK(worst < 0.05 * sup);
}

TEST_CASE("monte carlo determinism across thread counts") {
    SpaceGrid g = make_space_grid(1, 20.0, 128);
    LevyKernelSpec spec = cauchy_spec(g, bin_gaussian(g, 0.3, 1.0));
    int saved = thread_count();
    set_thread_count(1);
    auto a = monte_carlo_oracle(spec, 0.7, {0.0}, 150000, 5);
    set_thread_count(4);
    auto b = monte_carlo_oracle(spec, 0.7, {0.0}, 150000, 5);
    set_thread_count(saved);
    for (std::size_t q = 0; q < a.histogram.values.size(); ++q)
        CHECK(a.histogram.values[q] == b.histogram.values[q]);
}
