#include "perturb.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "fft.hpp"

namespace kp {

namespace {

using Spectrum = std::vector<std::complex<double>>;

Spectrum spectrum_of(const std::vector<double>& v, const std::vector<int>& dims) {
    Spectrum s(v.begin(), v.end());
    fft::transform(s, dims, -1);
    return s;
}

std::vector<double> dense_pair_block(const ForwardKernel& k, int i, int j) {
    const std::int64_t S = k.sgrid.size();
    const int T = k.tgrid.n_nodes();
    std::vector<double> out(static_cast<std::size_t>(S * S));
    for (std::int64_t x = 0; x < S; ++x)
        for (std::int64_t y = 0; y < S; ++y)
            out[static_cast<std::size_t>(x * S + y)] =
                k.dense[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)];
    return out;
}

}  // namespace

QFunction make_linear_q(double c) {
    require(std::isfinite(c) && c >= 0.0, "QFunction: c must be finite and >= 0");
    return QFunction{c};
}

double bound_factor(double eta, double q) {
    require(eta >= 0.0 && eta < 1.0 && q >= 0.0, "bound_factor: need 0 <= eta < 1, q >= 0");
    if (eta == 0.0) return std::exp(q);
    return std::pow(1.0 / (1.0 - eta), 1.0 + q / eta);
}

double product_tail(double eta, double q, int n_terms) {
    require(eta >= 0.0 && eta < 1.0 && q >= 0.0, "product_tail: need 0 <= eta < 1, q >= 0");
    double term = 1.0;
    for (int l = 1; l <= n_terms; ++l) term *= eta + q / l;
    double tail = 0.0;
    for (int l = n_terms + 1; l <= n_terms + 1000000; ++l) {
        term *= eta + q / l;
        tail += term;
        if (term == 0.0) break;
        double r = eta + q / (l + 1);  // ratios decrease towards eta < 1
        if (r < 1.0) {
            double geo = term * r / (1.0 - r);
            if (geo <= 1e-16 * tail || geo < 1e-300) return tail + geo;
        }
    }
    return tail;
}

double BoundCertificate::max_tail() const {
    double m = 0.0;
    for (double t : tail_per_lag) m = std::max(m, t);
    return m;
}

ForwardKernel series_step(const ForwardKernel& a, const JumpKernel& j, const ForwardKernel& base,
                          bool delta_content) {
    ForwardKernel aj = apply_jump(a, j);
    ForwardKernel out = compose(aj, base);
    if (base.transition_limits) {
        const double half_dt = 0.5 * base.tgrid.dt_step();
        if (delta_content) out = axpy(half_dt, jump_then(j, base), out);
        out = axpy(half_dt, aj, out);
    }
    return out;
}

ForwardKernel series_term(const ForwardKernel& k, const JumpKernel& j, int n) {
    require(n >= 0, "series_term: n >= 0 required");
    ForwardKernel term = k;
    for (int m = 1; m <= n; ++m) term = series_step(term, j, k, /*delta_content=*/m == 1);
    return term;
}

double lemma1_defect(const ForwardKernel& k, const JumpKernel& j, int n) {
    require(n >= 1, "lemma1_defect: n >= 1 required");
    // Associativity of the node-quadrature algebra: every split of the chain
    // (KJ)^n K is the same finite sum, so the routes agree to roundoff. (The
    // trapezoid endpoint terms of the shipped series rule recombine across
    // splits only up to quadrature order; the split identity checked here is
    // the algebraic one.)
    std::vector<ForwardKernel> terms;
    terms.push_back(k);
    for (int m = 1; m <= n; ++m) terms.push_back(compose(apply_jump(terms.back(), j), k));
    const ForwardKernel& kn = terms.back();
    const double sup = kn.max_abs();
    if (sup == 0.0) return 0.0;
    double worst = 0.0;
    for (int m = 0; m <= n - 1; ++m) {
        ForwardKernel lhs = compose(apply_jump(terms[static_cast<std::size_t>(n - 1 - m)], j),
                                    terms[static_cast<std::size_t>(m)]);
        worst = std::max(worst, max_entry_diff(lhs, kn) / sup);
    }
    return worst;
}

SmallnessFit verify_smallness(const ForwardKernel& k, const JumpKernel& j) {
    ForwardKernel k1 = kjk(k, j);
    SmallnessFit fit;
    fit.jump_norm = j_norm(j);

    const double k1_max = k1.max_abs();
    const double leak_tol = 1e-12 * k1_max;

    // (dt, Rmax) over pairs; support bookkeeping
    std::vector<std::pair<double, double>> pair_rmax;
    auto scan = [&](double lag_dt, const double* base, const double* first, std::int64_t count) {
        double rmax = 0.0;
        for (std::int64_t q = 0; q < count; ++q) {
            if (base[q] < kSupportFloor) {
                ++fit.off_support_entries;
                if (first[q] > leak_tol && first[q] > kSupportFloor)
                    throw unsupported_perturbation_error(
                        "smallness condition cannot hold: K J K charges entries outside the "
                        "support of K");
                continue;
            }
            rmax = std::max(rmax, first[q] / base[q]);
        }
        pair_rmax.emplace_back(lag_dt, rmax);
    };

    if (k.rep == ForwardKernel::Rep::stationary) {
        for (int l = 1; l <= k.n_lags(); ++l)
            scan(k.tgrid.lag(l), k.slices[static_cast<std::size_t>(l - 1)].data(),
                 k1.slices[static_cast<std::size_t>(l - 1)].data(), k.spatial_size());
    } else {
        const std::int64_t S = k.sgrid.size();
        const int T = k.tgrid.n_nodes();
        for (int i = 0; i < T; ++i)
            for (int jj = i + 1; jj < T; ++jj) {
                auto a = dense_pair_block(k, i, jj);
                auto b = dense_pair_block(k1, i, jj);
                scan(k.tgrid.lag(jj - i), a.data(), b.data(), S * S);
            }
    }

    if (k1_max == 0.0) {
        fit.feasible = true;
        fit.eta = 0.0;
        fit.c = 0.0;
        fit.c_min = 0.0;
        fit.eta_at_c_min = 0.0;
        fit.frontier = {{0.0, 0.0}};
        return fit;
    }

    // geometric scan of c; eta(c) = sup over pairs of (Rmax - c dt)^+
    const int kScan = 64;
    const double c_lo = fit.jump_norm > 0 ? fit.jump_norm / 100.0 : 1e-6;
    const double c_hi = fit.jump_norm > 0 ? fit.jump_norm * 100.0 : 1e+6;
    auto eta_of = [&](double c) {
        double e = 0.0;
        for (const auto& [dtv, rmax] : pair_rmax) e = std::max(e, rmax - c * dtv);
        return std::max(e, 0.0);
    };
    fit.frontier.reserve(kScan);
    for (int s = 0; s < kScan; ++s) {
        double c = c_lo * std::pow(c_hi / c_lo, s / static_cast<double>(kScan - 1));
        fit.frontier.emplace_back(c, eta_of(c));
    }
    double eta_star = std::numeric_limits<double>::infinity();
    for (const auto& [c, e] : fit.frontier) eta_star = std::min(eta_star, e);
    double c_star = fit.frontier.back().first;
    for (const auto& [c, e] : fit.frontier)
        if (e <= eta_star * (1.0 + 1e-12) + 1e-300) {
            c_star = c;
            break;
        }
    fit.eta = eta_star;
    fit.c = c_star;
    fit.feasible = eta_star < 1.0;
    fit.c_min = fit.frontier.back().first;
    fit.eta_at_c_min = fit.frontier.back().second;
    for (const auto& [c, e] : fit.frontier)
        if (e < 1.0) {
            fit.c_min = c;
            fit.eta_at_c_min = e;
            break;
        }
    return fit;
}

double fit_c_at_eta(const ForwardKernel& k, const JumpKernel& j, double eta) {
    require(eta >= 0.0, "fit_c_at_eta: eta >= 0 required");
    ForwardKernel k1 = kjk(k, j);
    double c = 0.0;
    auto scan = [&](double lag_dt, const double* base, const double* first, std::int64_t count) {
        for (std::int64_t q = 0; q < count; ++q) {
            if (base[q] < kSupportFloor) continue;
            double r = first[q] / base[q];
            if (r > eta) c = std::max(c, (r - eta) / lag_dt);
        }
    };
    if (k.rep == ForwardKernel::Rep::stationary) {
        for (int l = 1; l <= k.n_lags(); ++l)
            scan(k.tgrid.lag(l), k.slices[static_cast<std::size_t>(l - 1)].data(),
                 k1.slices[static_cast<std::size_t>(l - 1)].data(), k.spatial_size());
    } else {
        const int T = k.tgrid.n_nodes();
        for (int i = 0; i < T; ++i)
            for (int jj = i + 1; jj < T; ++jj) {
                auto a = dense_pair_block(k, i, jj);
                auto b = dense_pair_block(k1, i, jj);
                scan(k.tgrid.lag(jj - i), a.data(), b.data(),
                     k.sgrid.size() * k.sgrid.size());
            }
    }
    return c;
}

namespace {

PerturbedKernel build_series(const ForwardKernel& k, const JumpKernel& j, const QFunction& q,
                             double eta, double rel_tol, bool smallness_verified, int n_max,
                             bool signed_perturbation) {
    require(std::isfinite(eta) && eta >= 0.0, "perturbation series: eta >= 0 required");
    if (eta >= 1.0) throw invalid_argument_error("perturbation series: eta must be < 1");
    require(rel_tol > 0.0, "perturbation series: rel_tol must be positive");

    const int M = k.n_lags();
    const double q_max = q.at_lag(k.tgrid.lag(M));

    int n_terms = -1;
    for (int n = 0; n <= n_max; ++n) {
        if (product_tail(eta, q_max, n) <= rel_tol) {
            n_terms = n;
            break;
        }
    }
    if (n_terms < 0)
        throw no_convergence_error(
            "perturbation series: certified tail does not reach rel_tol within n_max terms");

    PerturbedKernel p;
    p.base = k;
    p.jump = j;
    p.signed_perturbation = signed_perturbation;
    p.terms.reserve(static_cast<std::size_t>(n_terms) + 1);
    p.terms.push_back(k);
    p.series_sum = k;
    double sign = 1.0;
    for (int n = 1; n <= n_terms; ++n) {
        p.terms.push_back(series_step(p.terms.back(), j, k, /*delta_content=*/n == 1));
        sign = signed_perturbation ? -sign : 1.0;
        p.series_sum = axpy(sign, p.terms.back(), p.series_sum);
    }

    p.certificate.eta = eta;
    p.certificate.q = q;
    p.certificate.n_terms = n_terms;
    p.certificate.rel_tol = rel_tol;
    p.certificate.smallness_verified = smallness_verified;
    p.certificate.tail_per_lag.resize(static_cast<std::size_t>(M));
    for (int l = 1; l <= M; ++l)
        p.certificate.tail_per_lag[static_cast<std::size_t>(l - 1)] =
            product_tail(eta, q.at_lag(k.tgrid.lag(l)), n_terms);

    if (signed_perturbation) {
        const double q_full = q_max;
        p.signed_bounds.lower_applicable = q_full <= (1.0 - eta) / 2.0;
        p.signed_bounds.upper_applicable = q_full <= 2.0 * (1.0 - eta);
        double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
        auto scan = [&](const double* base, const double* sum, std::int64_t count) {
            for (std::int64_t i = 0; i < count; ++i) {
                if (base[i] < kSupportFloor) continue;
                double r = sum[i] / base[i];
                mn = std::min(mn, r);
                mx = std::max(mx, r);
            }
        };
        if (k.rep == ForwardKernel::Rep::stationary) {
            for (int l = 0; l < M; ++l)
                scan(k.slices[static_cast<std::size_t>(l)].data(),
                     p.series_sum.slices[static_cast<std::size_t>(l)].data(), k.spatial_size());
        } else {
            scan(k.dense.data(), p.series_sum.dense.data(),
                 static_cast<std::int64_t>(k.dense.size()));
        }
        p.signed_bounds.min_ratio = mn;
        p.signed_bounds.max_ratio = mx;
    }
    return p;
}

}  // namespace

PerturbedKernel perturbation_series(const ForwardKernel& k, const JumpKernel& j, const QFunction& q,
                                    double eta, double rel_tol, bool smallness_verified,
                                    int n_max) {
    return build_series(k, j, q, eta, rel_tol, smallness_verified, n_max, false);
}

PerturbedKernel signed_series(const ForwardKernel& k, const JumpKernel& j, const QFunction& q,
                              double eta, double rel_tol, bool smallness_verified, int n_max) {
    return build_series(k, j, q, eta, rel_tol, smallness_verified, n_max, true);
}

namespace {

// applies f(lag_index, base_values, other_values, count) over matching blocks
template <typename F>
void for_each_block(const ForwardKernel& a, const ForwardKernel& b, F f) {
    check_same_grids(a, b);
    require(a.rep == b.rep, "block scan: representations must match");
    if (a.rep == ForwardKernel::Rep::stationary) {
        for (int l = 1; l <= a.n_lags(); ++l)
            f(l, a.slices[static_cast<std::size_t>(l - 1)].data(),
              b.slices[static_cast<std::size_t>(l - 1)].data(), a.spatial_size());
    } else {
        const std::int64_t S = a.sgrid.size();
        const int T = a.tgrid.n_nodes();
        for (int i = 0; i < T; ++i)
            for (int jj = i + 1; jj < T; ++jj) {
                auto ba = dense_pair_block(a, i, jj);
                auto bb = dense_pair_block(b, i, jj);
                f(jj - i, ba.data(), bb.data(), S * S);
            }
    }
}

}  // namespace

double verify_term_recursion(const PerturbedKernel& p, int n_max) {
    const double eta = p.certificate.eta;
    const QFunction& q = p.certificate.q;
    double worst = 0.0;
    const int N = std::min<int>(n_max, static_cast<int>(p.terms.size()) - 1);
    for (int n = 1; n <= N; ++n) {
        for_each_block(p.terms[static_cast<std::size_t>(n - 1)],
                       p.terms[static_cast<std::size_t>(n)],
                       [&](int lag, const double* prev, const double* cur, std::int64_t count) {
                           const double factor =
                               eta + q.at_lag(p.base.tgrid.lag(lag)) / n;
                           for (std::int64_t i = 0; i < count; ++i) {
                               if (prev[i] < kSupportFloor) continue;
                               worst = std::max(worst,
                                                (cur[i] - prev[i] * factor) / (prev[i] * factor));
                           }
                       });
    }
    return std::max(worst, 0.0);
}

double verify_product_bound(const PerturbedKernel& p, int n_max) {
    const double eta = p.certificate.eta;
    const QFunction& q = p.certificate.q;
    double worst = 0.0;
    const int N = std::min<int>(n_max, static_cast<int>(p.terms.size()) - 1);
    for (int n = 1; n <= N; ++n) {
        for_each_block(p.base, p.terms[static_cast<std::size_t>(n)],
                       [&](int lag, const double* base, const double* cur, std::int64_t count) {
                           double pi = 1.0;
                           const double qv = q.at_lag(p.base.tgrid.lag(lag));
                           for (int l = 1; l <= n; ++l) pi *= eta + qv / l;
                           for (std::int64_t i = 0; i < count; ++i) {
                               double bound = base[i] * pi;
                               if (bound < kSupportFloor) continue;
                               worst = std::max(worst, (cur[i] - bound) / bound);
                           }
                       });
    }
    return std::max(worst, 0.0);
}

double verify_bound(const PerturbedKernel& p) {
    const double eta = p.certificate.eta;
    const QFunction& q = p.certificate.q;
    double worst = 0.0;
    for_each_block(p.base, p.series_sum,
                   [&](int lag, const double* base, const double* sum, std::int64_t count) {
                       const double factor = bound_factor(eta, q.at_lag(p.base.tgrid.lag(lag)));
                       for (std::int64_t i = 0; i < count; ++i) {
                           if (base[i] < kSupportFloor) continue;
                           worst = std::max(worst, sum[i] / (base[i] * factor));
                       }
                   });
    return worst;
}

double perturbation_formula_defect(const PerturbedKernel& p) {
    // K-tilde = K + K-tilde J K (minus sign for the signed series)
    ForwardKernel tjk = series_step(p.series_sum, p.jump, p.base, /*delta_content=*/true);
    const double sign = p.signed_perturbation ? -1.0 : 1.0;
    ForwardKernel rhs = axpy(sign, tjk, p.base);
    double worst = 0.0;
    for_each_block(p.series_sum, rhs,
                   [&](int, const double* lhs, const double* r, std::int64_t count) {
                       for (std::int64_t i = 0; i < count; ++i) {
                           double den = std::max(std::abs(lhs[i]), kSupportFloor);
                           if (std::abs(lhs[i]) < kSupportFloor && std::abs(r[i]) < kSupportFloor)
                               continue;
                           worst = std::max(worst, std::abs(lhs[i] - r[i]) / den);
                       }
                   });
    return worst;
}

double chapman_defect(const ForwardKernel& k) {
    double worst = 0.0;
    if (k.rep == ForwardKernel::Rep::stationary) {
        const auto dims = k.sgrid.dims();
        const double vol = k.sgrid.cell_volume();
        const int M = k.n_lags();
        std::vector<Spectrum> spec(static_cast<std::size_t>(M));
        for (int l = 0; l < M; ++l)
            spec[static_cast<std::size_t>(l)] = spectrum_of(k.slices[static_cast<std::size_t>(l)], dims);
        const std::int64_t S = k.spatial_size();
        for (int a = 1; a < M; ++a)
            for (int b = 1; a + b <= M; ++b) {
                Spectrum prod(static_cast<std::size_t>(S));
                const auto& fa = spec[static_cast<std::size_t>(a - 1)];
                const auto& fb = spec[static_cast<std::size_t>(b - 1)];
                for (std::int64_t i = 0; i < S; ++i)
                    prod[static_cast<std::size_t>(i)] =
                        fa[static_cast<std::size_t>(i)] * fb[static_cast<std::size_t>(i)];
                fft::transform(prod, dims, +1);
                const auto& target = k.slices[static_cast<std::size_t>(a + b - 1)];
                const double scale = vol / static_cast<double>(S);
                for (std::int64_t i = 0; i < S; ++i) {
                    double conv = prod[static_cast<std::size_t>(i)].real() * scale;
                    double ref = target[static_cast<std::size_t>(i)];
                    if (ref < kSupportFloor) continue;
                    worst = std::max(worst, std::abs(conv - ref) / ref);
                }
            }
        return worst;
    }

    const std::int64_t S = k.sgrid.size();
    const int T = k.tgrid.n_nodes();
    const double vol = k.sgrid.cell_volume();
    for (int i = 0; i < T; ++i)
        for (int g = i + 1; g < T; ++g)
            for (int j = g + 1; j < T; ++j)
                for (std::int64_t x = 0; x < S; ++x)
                    for (std::int64_t y = 0; y < S; ++y) {
                        double acc = 0.0;
                        for (std::int64_t z = 0; z < S; ++z)
                            acc += k.value(i, x, g, z) * k.value(g, z, j, y);
                        acc *= vol;
                        double ref = k.value(i, x, j, y);
                        if (ref < kSupportFloor) continue;
                        worst = std::max(worst, std::abs(acc - ref) / ref);
                    }
    return worst;
}

double lemma_prop1_defect(const ForwardKernel& k, const JumpKernel& j, int n) {
    require(n >= 0, "lemma_prop1_defect: n >= 0 required");
    if (n == 0) return chapman_defect(k);

    // node-quadrature series: plain interior-node rule, no endpoint terms,
    // so the defect isolates the first-order time-quadrature error
    std::vector<ForwardKernel> terms;
    terms.push_back(k);
    for (int m = 1; m <= n; ++m)
        terms.push_back(compose(apply_jump(terms.back(), j), k));

    // The identity is checked at the strip endpoints (s, t) = (t0, t1) with
    // the split node u ranging over the interior; the node-quadrature series
    // misses the single-node contribution at u, a first-order-in-dt effect.
    double worst = 0.0;
    const int M = k.n_lags();
    if (k.rep == ForwardKernel::Rep::stationary) {
        const auto dims = k.sgrid.dims();
        const double vol = k.sgrid.cell_volume();
        const std::int64_t S = k.spatial_size();
        std::vector<std::vector<Spectrum>> spec(static_cast<std::size_t>(n) + 1);
        for (int m = 0; m <= n; ++m) {
            spec[static_cast<std::size_t>(m)].resize(static_cast<std::size_t>(M));
            for (int l = 0; l < M; ++l)
                spec[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)] = spectrum_of(
                    terms[static_cast<std::size_t>(m)].slices[static_cast<std::size_t>(l)], dims);
        }
        const auto& target = terms[static_cast<std::size_t>(n)].slices[static_cast<std::size_t>(M - 1)];
        const auto& base_full = k.slices[static_cast<std::size_t>(M - 1)];
        for (int a = 1; a < M; ++a) {
            int b = M - a;
            Spectrum acc(static_cast<std::size_t>(S), {0.0, 0.0});
            for (int m = 0; m <= n; ++m) {
                const auto& fa = spec[static_cast<std::size_t>(m)][static_cast<std::size_t>(a - 1)];
                const auto& fb =
                    spec[static_cast<std::size_t>(n - m)][static_cast<std::size_t>(b - 1)];
                for (std::int64_t i = 0; i < S; ++i)
                    acc[static_cast<std::size_t>(i)] +=
                        fa[static_cast<std::size_t>(i)] * fb[static_cast<std::size_t>(i)];
            }
            fft::transform(acc, dims, +1);
            const double scale = vol / static_cast<double>(S);
            // measured in units of the base kernel, like every series bound
            for (std::int64_t i = 0; i < S; ++i) {
                double lhs = acc[static_cast<std::size_t>(i)].real() * scale;
                double ref = target[static_cast<std::size_t>(i)];
                double den = base_full[static_cast<std::size_t>(i)];
                if (den < kSupportFloor) continue;
                worst = std::max(worst, std::abs(lhs - ref) / den);
            }
        }
        return worst;
    }

    const std::int64_t S = k.sgrid.size();
    const int T = k.tgrid.n_nodes();
    const double vol = k.sgrid.cell_volume();
    const int i = 0, jj = T - 1;
    for (int g = i + 1; g < jj; ++g)
        for (std::int64_t x = 0; x < S; ++x)
            for (std::int64_t y = 0; y < S; ++y) {
                double acc = 0.0;
                for (int m = 0; m <= n; ++m)
                    for (std::int64_t z = 0; z < S; ++z)
                        acc += terms[static_cast<std::size_t>(m)].value(i, x, g, z) *
                               terms[static_cast<std::size_t>(n - m)].value(g, z, jj, y);
                acc *= vol;
                double ref = terms[static_cast<std::size_t>(n)].value(i, x, jj, y);
                double den = k.value(i, x, jj, y);
                if (den < kSupportFloor) continue;
                worst = std::max(worst, std::abs(acc - ref) / den);
            }
    return worst;
}

PropagationResult propagate_lower_bound(const ForwardKernel& k_tilde_minus, const ForwardKernel& k,
                                        const std::vector<int>& nodes, double eta,
                                        const QFunction& q) {
    check_same_grids(k_tilde_minus, k);
    require(nodes.size() >= 2, "propagate_lower_bound: need at least two subdivision nodes");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        require(nodes[i] < nodes[i + 1] && nodes[i] >= 0 && nodes[i + 1] <= k.tgrid.n_steps,
                "propagate_lower_bound: nodes must be increasing grid indices");
        double qv = q(k.tgrid.node(nodes[i]), k.tgrid.node(nodes[i + 1]));
        if (qv > (1.0 - eta) / 2.0)
            throw invalid_argument_error(
                "propagate_lower_bound: subdivision violates Q <= (1-eta)/2 on a subinterval");
    }
    const int n_strips = static_cast<int>(nodes.size()) - 1;
    PropagationResult res;
    res.bound = std::pow((1.0 - eta) / 2.0, n_strips);

    const double vol = k.sgrid.cell_volume();
    double mn = std::numeric_limits<double>::infinity();

    if (k.rep == ForwardKernel::Rep::stationary &&
        k_tilde_minus.rep == ForwardKernel::Rep::stationary) {
        const auto dims = k.sgrid.dims();
        const std::int64_t S = k.spatial_size();
        auto composed = [&](const ForwardKernel& kk) {
            Spectrum acc(static_cast<std::size_t>(S), {1.0, 0.0});
            for (int s = 0; s < n_strips; ++s) {
                int lag = nodes[static_cast<std::size_t>(s) + 1] - nodes[static_cast<std::size_t>(s)];
                Spectrum f = spectrum_of(kk.slices[static_cast<std::size_t>(lag - 1)], dims);
                for (std::int64_t i = 0; i < S; ++i)
                    acc[static_cast<std::size_t>(i)] *= f[static_cast<std::size_t>(i)];
            }
            fft::transform(acc, dims, +1);
            // each of the (n_strips - 1) spatial links carries a vol factor;
            // the unnormalized transform round trip leaves one 1/S
            double scale = std::pow(vol, n_strips - 1) / static_cast<double>(S);
            std::vector<double> out(static_cast<std::size_t>(S));
            for (std::int64_t i = 0; i < S; ++i)
                out[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].real() * scale;
            return out;
        };
        auto ct = composed(k_tilde_minus);
        auto ck = composed(k);
        for (std::int64_t i = 0; i < S; ++i) {
            if (ck[static_cast<std::size_t>(i)] < kSupportFloor) continue;
            mn = std::min(mn, ct[static_cast<std::size_t>(i)] / ck[static_cast<std::size_t>(i)]);
        }
    } else {
        const ForwardKernel dt_ = expand_to_dense(k_tilde_minus);
        const ForwardKernel dk = expand_to_dense(k);
        const std::int64_t S = k.sgrid.size();
        auto composed = [&](const ForwardKernel& kk) {
            std::vector<double> cur(static_cast<std::size_t>(S * S), 0.0);
            for (std::int64_t x = 0; x < S; ++x)
                for (std::int64_t y = 0; y < S; ++y)
                    cur[static_cast<std::size_t>(x * S + y)] =
                        kk.value(nodes[0], x, nodes[1], y);
            for (int s = 1; s < n_strips; ++s) {
                std::vector<double> nxt(static_cast<std::size_t>(S * S), 0.0);
                for (std::int64_t x = 0; x < S; ++x)
                    for (std::int64_t y = 0; y < S; ++y) {
                        double acc = 0.0;
                        for (std::int64_t z = 0; z < S; ++z)
                            acc += cur[static_cast<std::size_t>(x * S + z)] *
                                   kk.value(nodes[static_cast<std::size_t>(s)], z,
                                            nodes[static_cast<std::size_t>(s) + 1], y);
                        nxt[static_cast<std::size_t>(x * S + y)] = acc * vol;
                    }
                cur = std::move(nxt);
            }
            return cur;
        };
        auto ct = composed(dt_);
        auto ck = composed(dk);
        for (std::size_t i = 0; i < ct.size(); ++i) {
            if (ck[i] < kSupportFloor) continue;
            mn = std::min(mn, ct[i] / ck[i]);
        }
    }
    res.min_ratio = mn;
    res.worst_defect = std::max(0.0, res.bound - mn);
    return res;
}

}  // namespace kp
