#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "perturb.hpp"
#include "support.hpp"

using namespace kp;

namespace {

double loop_vs_kernel(const ForwardKernel& k, const oracle::LoopKernel& lk) {
    const ForwardKernel d = expand_to_dense(k);
    double worst = 0.0;
    double sup = 0.0;
    for (double v : lk.data) sup = std::max(sup, std::abs(v));
    if (sup == 0.0) sup = 1.0;
    for (std::size_t q = 0; q < lk.data.size(); ++q)
        worst = std::max(worst, std::abs(d.dense[q] - lk.data[q]) / sup);
    return worst;
}

oracle::LoopKernel as_loop(const ForwardKernel& k) {
    const ForwardKernel d = expand_to_dense(k);
    oracle::LoopKernel lk;
    lk.T = k.tgrid.n_nodes();
    lk.S = k.sgrid.size();
    lk.dt = k.tgrid.dt_step();
    lk.vol = k.sgrid.cell_volume();
    lk.data = d.dense;
    return lk;
}

std::vector<double> profile_to_matrix(const JumpKernel& j) {
    const std::int64_t S = j.sgrid.size();
    std::vector<double> m(static_cast<std::size_t>(S * S));
    for (std::int64_t x = 0; x < S; ++x)
        for (std::int64_t y = 0; y < S; ++y)
            m[static_cast<std::size_t>(x * S + y)] = j.value(x, y);
    return m;
}

}  // namespace

TEST_CASE("series term basics") {
    SpaceGrid sg = make_space_grid(1, 2.0, 4);
    TimeGrid tg = make_time_grid(0.0, 1.0, 3);
    ForwardKernel k = testkit::random_dense_kernel(tg, sg, 101);
    // n = 0 is the kernel itself
    CHECK(max_entry_diff(series_term(k, make_zero_jump(sg), 0), k) == 0.0);
    // zero jump kills every higher term
    CHECK(series_term(k, make_zero_jump(sg), 1).is_zero());
    CHECK(series_term(k, make_zero_jump(sg), 3).is_zero());
}

TEST_CASE("series terms match the independent nested-loop oracle (random, strict rule)") {
    for (int nx : {3, 4}) {
        for (unsigned seed : {7u, 8u}) {
            SpaceGrid sg = nx % 2 == 0 ? make_space_grid(1, 2.0, nx)
                                       : make_space_grid_unchecked(1, 2.0, nx);
            TimeGrid tg = make_time_grid(0.0, 1.0, 3);  // 4 time nodes
            ForwardKernel k = testkit::random_dense_kernel(tg, sg, seed);
            auto jm = testkit::random_jump_matrix(sg, seed + 1000);
            JumpKernel j = make_jump_matrix(sg, jm);
            oracle::LoopKernel lk = as_loop(k);
            for (int n = 0; n <= 3; ++n) {
                ForwardKernel term = series_term(k, j, n);
                oracle::LoopKernel ref = oracle::loop_series_term(lk, jm, n, false);
                CAPTURE(nx);
                CAPTURE(seed);
                CAPTURE(n);
                CHECK(loop_vs_kernel(term, ref) < 1e-12);
            }
        }
    }
}

TEST_CASE("series terms match the loop oracle with endpoint terms (transition kernels)") {
    SpaceGrid sg = make_space_grid(1, 3.0, 8);
    TimeGrid tg = make_time_grid(0.0, 1.0, 3);
    ForwardKernel k = testkit::toy_semigroup(tg, sg);
    JumpKernel j = testkit::eps_jump(sg, 1.0, 0.05, sg.spacing());
    oracle::LoopKernel lk = as_loop(k);
    auto jm = profile_to_matrix(j);
    for (int n = 1; n <= 3; ++n) {
        ForwardKernel term = series_term(k, j, n);
        oracle::LoopKernel ref = oracle::loop_series_term(lk, jm, n, true);
        CAPTURE(n);
        CHECK(loop_vs_kernel(term, ref) < 1e-12);
    }
}

TEST_CASE("lemma 1 split consistency") {
    SpaceGrid sg = make_space_grid(1, 2.0, 4);
    TimeGrid tg = make_time_grid(0.0, 1.0, 3);
    ForwardKernel k = testkit::random_dense_kernel(tg, sg, 202);
    JumpKernel j = make_jump_matrix(sg, testkit::random_jump_matrix(sg, 203));
    CHECK(lemma1_defect(k, j, 1) == 0.0);  // single route
    CHECK(lemma1_defect(k, j, 2) < 1e-12);
    CHECK(lemma1_defect(k, j, 3) < 1e-12);

    // split consistency is pure algebra, exact for transition kernels too
    SpaceGrid sg2 = make_space_grid(1, 3.0, 16);
    TimeGrid tg2 = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg2, sg2);
    JumpKernel j2 = testkit::eps_jump(sg2, 1.0, 0.02, sg2.spacing());
    CHECK(lemma1_defect(toy, j2, 2) < 1e-12);
    CHECK(lemma1_defect(toy, j2, 3) < 1e-12);
}

TEST_CASE("certified tail values") {
    // eta = 0, Q = 1: tail after N terms is e - sum_{n<=N} 1/n!
    double partial = 0.0, fact = 1.0;
    for (int n = 0; n <= 12; ++n) {
        if (n > 0) fact *= n;
        partial += 1.0 / fact;
    }
    double expect = std::exp(1.0) - partial;
    CHECK(product_tail(0.0, 1.0, 12) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(product_tail(0.0, 1.0, 12) < 1e-9);
    // monotone in the truncation index
    CHECK(product_tail(0.3, 2.0, 8) < product_tail(0.3, 2.0, 4));
    // J = 0 limit
    CHECK(product_tail(0.0, 0.0, 0) == 0.0);
}

TEST_CASE("bound factor closed forms") {
    CHECK(std::abs(bound_factor(0.0, 1.0) - std::exp(1.0)) < 1e-15);
    CHECK(bound_factor(0.5, 0.5) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(bound_factor(0.0, 0.0) == 1.0);
    CHECK_THROWS_AS(bound_factor(1.0, 0.5), invalid_argument_error);
}

TEST_CASE("verify_smallness basics") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);

    SUBCASE("zero jump gives the trivial certificate") {
        auto fit = verify_smallness(toy, make_zero_jump(sg));
        CHECK(fit.feasible);
        CHECK(fit.eta == 0.0);
        CHECK(fit.c == 0.0);
    }

    SUBCASE("identity jump on a transition kernel collapses to R = (t-s)") {
        auto fit = verify_smallness(toy, make_identity_jump(sg));
        CHECK(fit.feasible);
        CHECK(fit.eta < 1e-9);
        CHECK(fit.c >= 1.0);
        CHECK(fit.c < 1.2);  // geometric scan granularity
    }

    SUBCASE("support violation is detected") {
        // base kernel supported on the diagonal only; any spreading jump
        // pushes mass off the support
        const std::int64_t S = sg.size();
        const int T = tg.n_nodes();
        std::vector<double> data(static_cast<std::size_t>(T * S * T * S), 0.0);
        for (int i = 0; i < T; ++i)
            for (int jj = i + 1; jj < T; ++jj)
                for (std::int64_t x = 0; x < S; ++x)
                    data[static_cast<std::size_t>(((i * S + x) * T + jj) * S + x)] = 1.0;
        ForwardKernel diag = make_dense_kernel(tg, sg, data);
        JumpKernel spread = testkit::eps_jump(sg, 1.0, 0.1, sg.spacing());
        ForwardKernel dj = expand_to_dense(diag);
        std::vector<double> jm = profile_to_matrix(spread);
        CHECK_THROWS_AS(verify_smallness(dj, make_jump_matrix(sg, jm)),
                        unsupported_perturbation_error);
    }
}

TEST_CASE("perturbation series basics and errors") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);

    PerturbedKernel p = perturbation_series(toy, make_zero_jump(sg), make_linear_q(0.0), 0.0, 1e-9);
    CHECK(p.certificate.n_terms == 0);
    CHECK(max_entry_diff(p.series_sum, toy) == 0.0);
    CHECK(p.certificate.max_tail() == 0.0);

    CHECK_THROWS_AS(
        perturbation_series(toy, make_zero_jump(sg), make_linear_q(0.0), 1.0, 1e-9),
        invalid_argument_error);
    CHECK_THROWS_AS(perturbation_series(toy, make_zero_jump(sg), make_linear_q(50.0), 0.99, 1e-9,
                                        true, 5),
                    no_convergence_error);
}

TEST_CASE("theorem suite on an exact transition instance") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);
    JumpKernel j = testkit::eps_jump(sg, 1.0, 0.01, sg.spacing());

    auto fit = verify_smallness(toy, j);
    REQUIRE(fit.feasible);
    CHECK(fit.eta < 0.5);

    PerturbedKernel p = perturbation_series(toy, j, make_linear_q(fit.c), fit.eta, 1e-10);
    CHECK(verify_term_recursion(p, 5) <= 1e-9);
    CHECK(verify_product_bound(p, 5) <= 1e-9);
    CHECK(verify_bound(p) <= 1.0 + 1e-9);
    CHECK(perturbation_formula_defect(p) <= p.certificate.max_tail() + 1e-12);

    // monotone domination K <= K-tilde
    double worst = 0.0;
    for (std::size_t l = 0; l < toy.slices.size(); ++l)
        for (std::size_t q = 0; q < toy.slices[l].size(); ++q)
            worst = std::max(worst, toy.slices[l][q] - p.series_sum.slices[l][q]);
    CHECK(worst <= 0.0);
}

TEST_CASE("signed series sandwich and parity") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);

    SUBCASE("zero jump returns the base") {
        PerturbedKernel p = signed_series(toy, make_zero_jump(sg), make_linear_q(0.0), 0.0, 1e-9);
        CHECK(max_entry_diff(p.series_sum, toy) == 0.0);
    }

    JumpKernel j = testkit::eps_jump(sg, 1.0, 5e-4, sg.spacing());
    // certificate with most of the budget in eta so Q stays small
    double eta0 = 0.3;
    double c0 = fit_c_at_eta(toy, j, eta0);
    REQUIRE(c0 * 1.0 <= (1.0 - eta0) / 2.0);
    PerturbedKernel minus = signed_series(toy, j, make_linear_q(c0), eta0, 1e-12);
    PerturbedKernel plus = perturbation_series(toy, j, make_linear_q(c0), eta0, 1e-12);

    REQUIRE(minus.signed_bounds.lower_applicable);
    CHECK(minus.signed_bounds.min_ratio >= (1.0 - eta0) / 2.0 - 1e-9);
    CHECK(minus.signed_bounds.max_ratio <= 1.0 + 1e-9);

    // parity decomposition: K-minus + 2 * sum of odd terms = K-tilde
    ForwardKernel recon = minus.series_sum;
    for (std::size_t n = 1; n < minus.terms.size(); n += 2)
        recon = axpy(2.0, minus.terms[n], recon);
    double sup = plus.series_sum.max_abs();
    CHECK(max_entry_diff(recon, plus.series_sum) / sup < 1e-12);

    CHECK(perturbation_formula_defect(minus) <= minus.certificate.max_tail() + 1e-12);
}

TEST_CASE("transition closure of the perturbed kernel (exact base)") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);
    CHECK(chapman_defect(toy) < 1e-11);

    JumpKernel j = testkit::eps_jump(sg, 1.0, 0.02, sg.spacing());
    auto fit = verify_smallness(toy, j);
    PerturbedKernel p = perturbation_series(toy, j, make_linear_q(fit.c), fit.eta, 1e-13);
    // the endpoint terms of the series rule restore the closure exactly on an
    // exactly Chapman-Kolmogorov base
    CHECK(chapman_defect(p.series_sum) < 1e-9);

    // a random kernel is nowhere near a transition kernel
    ForwardKernel rnd = testkit::random_dense_kernel(tg, make_space_grid(1, 2.0, 4), 77);
    CHECK(chapman_defect(rnd) > 0.1);
}

TEST_CASE("split identity of the node-quadrature series converges first order") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    JumpKernel j = testkit::eps_jump(sg, 1.0, 0.02, sg.spacing());

    TimeGrid coarse = make_time_grid(0.0, 1.0, 4);
    TimeGrid fine = make_time_grid(0.0, 1.0, 8);
    ForwardKernel kc = testkit::toy_semigroup(coarse, sg);
    ForwardKernel kf = testkit::toy_semigroup(fine, sg);
    // one-step widths differ between the two grids; that is fine, the
    // identity is internal to each instance
    double d_coarse = lemma_prop1_defect(kc, j, 1);
    double d_fine = lemma_prop1_defect(kf, j, 1);
    CHECK(d_coarse > 0.0);
    CHECK(d_fine < d_coarse);
    CHECK(d_fine < 0.75 * d_coarse);

    CHECK(lemma_prop1_defect(kc, j, 0) == chapman_defect(kc));
}

TEST_CASE("lower bound propagation") {
    SpaceGrid sg = make_space_grid(1, 3.0, 16);
    TimeGrid tg = make_time_grid(0.0, 1.0, 4);
    ForwardKernel toy = testkit::toy_semigroup(tg, sg);
    JumpKernel j = testkit::eps_jump(sg, 1.0, 5e-4, sg.spacing());
    double eta0 = 0.2;
    double c0 = fit_c_at_eta(toy, j, eta0);
    REQUIRE(c0 * 1.0 <= (1.0 - eta0) / 2.0);
    PerturbedKernel minus = signed_series(toy, j, make_linear_q(c0), eta0, 1e-12);

    QFunction q = make_linear_q(c0);
    auto one = propagate_lower_bound(minus.series_sum, toy, {0, 4}, eta0, q);
    CHECK(one.min_ratio >= one.bound - 1e-9);

    auto two = propagate_lower_bound(minus.series_sum, toy, {0, 2, 4}, eta0, q);
    CHECK(two.bound == doctest::Approx(std::pow((1.0 - eta0) / 2.0, 2)));
    CHECK(two.min_ratio >= two.bound - 1e-9);

    // a subdivision whose Q budget is too large must be rejected
    QFunction big = make_linear_q(10.0);
    CHECK_THROWS_AS(propagate_lower_bound(minus.series_sum, toy, {0, 4}, eta0, big),
                    invalid_argument_error);
}

TEST_CASE("super-additivity of the linear Q family") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    QFunction q = make_linear_q(1.7);
    for (int it = 0; it < 1000; ++it) {
        double a = u(rng), b = u(rng), c = u(rng);
        double lo = std::min({a, b, c}), hi = std::max({a, b, c});
        double mid = a + b + c - lo - hi;
        double defect = q(lo, mid) + q(mid, hi) - q(lo, hi);
        CHECK(std::abs(defect) <= 1e-12 * (1.0 + q(lo, hi)));
    }
}
