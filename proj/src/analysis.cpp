#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "fft.hpp"

namespace kp {

namespace {
constexpr double kPi = std::numbers::pi;

// C-infinity bump: exp(-1/(1-r^2)) on |r| < 1, zero outside.
double bump(double r) {
    double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r2));
}
}  // namespace

JumpKernel make_epsilon_jump(const StableParams& params, const SpaceGrid& grid,
                             const EpsilonJumpSpec& spec) {
    require(params.dim == grid.dim, "epsilon jump: dimension mismatch");
    require(spec.epsilon >= 0.0, "epsilon jump: epsilon >= 0 required");
    double delta = spec.delta > 0.0 ? spec.delta : grid.spacing();
    std::vector<double> prof(static_cast<std::size_t>(grid.size()), 0.0);
    const double expo = grid.dim + params.alpha;
    for (std::int64_t o = 0; o < grid.size(); ++o) {
        double w = grid.offset_norm(o);
        if (w > grid.half_width / 2.0) continue;  // keeps the norm finite on the torus
        prof[static_cast<std::size_t>(o)] = spec.epsilon * std::pow(std::max(w, delta), -expo);
    }
    return make_jump_profile(grid, std::move(prof));
}

double condition_defect(const ForwardKernel& k, const JumpKernel& j, double eta, double c) {
    require(eta >= 0.0 && c >= 0.0, "condition defect: eta, c >= 0 required");
    ForwardKernel k1 = kjk(k, j);
    double worst = 0.0;
    if (k.rep == ForwardKernel::Rep::stationary) {
        for (int l = 1; l <= k.n_lags(); ++l) {
            const double budget = eta + c * k.tgrid.lag(l);
            const auto& base = k.slices[static_cast<std::size_t>(l - 1)];
            const auto& first = k1.slices[static_cast<std::size_t>(l - 1)];
            for (std::size_t q = 0; q < base.size(); ++q) {
                if (base[q] < kSupportFloor) continue;
                worst = std::max(worst, first[q] / base[q] - budget);
            }
        }
        return std::max(worst, 0.0);
    }
    const ForwardKernel kd = expand_to_dense(k);
    const ForwardKernel k1d = expand_to_dense(k1);
    const std::int64_t S = k.sgrid.size();
    const int T = k.tgrid.n_nodes();
    for (int i = 0; i < T; ++i)
        for (int jj = i + 1; jj < T; ++jj) {
            const double budget = eta + c * k.tgrid.lag(jj - i);
            for (std::int64_t x = 0; x < S; ++x)
                for (std::int64_t y = 0; y < S; ++y) {
                    double base = kd.value(i, x, jj, y);
                    if (base < kSupportFloor) continue;
                    worst = std::max(worst, k1d.value(i, x, jj, y) / base - budget);
                }
        }
    return std::max(worst, 0.0);
}

double short_time_eta(const ForwardKernel& k, const JumpKernel& j, double alpha) {
    ForwardKernel k1 = kjk(k, j);
    require(k.rep == ForwardKernel::Rep::stationary,
            "short_time_eta: stationary representation required");
    // the lag-independent part of the smallness budget shows at the shortest
    // lag, in the regime where the displacement dominates the time scale
    double sup = 0.0;
    const double lag = k.tgrid.lag(1);
    const auto& base = k.slices[0];
    const auto& first = k1.slices[0];
    for (std::int64_t o = 0; o < k.spatial_size(); ++o) {
        double w = k.sgrid.offset_norm(o);
        if (lag > std::pow(w, alpha)) continue;  // long-time regime
        double b = base[static_cast<std::size_t>(o)];
        if (b < kSupportFloor) continue;
        sup = std::max(sup, first[static_cast<std::size_t>(o)] / b);
    }
    return sup;
}

Corollary52Result corollary52_check(const ForwardKernel& base, const PerturbedKernel& plus,
                                    const PerturbedKernel& minus, double eta, double c) {
    require(base.rep == ForwardKernel::Rep::stationary,
            "corollary52_check: stationary representation required");
    Corollary52Result res;
    res.signed_vs_lower = std::numeric_limits<double>::infinity();
    res.min_minus_over_base = std::numeric_limits<double>::infinity();
    for (int l = 1; l <= base.n_lags(); ++l) {
        const double lag = base.tgrid.lag(l);
        const double envelope = bound_factor(eta, c * lag);
        const double lower =
            std::pow((1.0 - eta) / 2.0, 1.0 + 2.0 * c * lag / (1.0 - eta));
        const auto& b = base.slices[static_cast<std::size_t>(l - 1)];
        const auto& p = plus.series_sum.slices[static_cast<std::size_t>(l - 1)];
        const auto& m = minus.series_sum.slices[static_cast<std::size_t>(l - 1)];
        for (std::size_t q = 0; q < b.size(); ++q) {
            if (b[q] < kSupportFloor) continue;
            double rp = p[q] / b[q];
            double rm = m[q] / b[q];
            res.max_plus_over_base = std::max(res.max_plus_over_base, rp);
            res.max_minus_over_base = std::max(res.max_minus_over_base, rm);
            res.min_minus_over_base = std::min(res.min_minus_over_base, rm);
            res.upper_vs_envelope = std::max(res.upper_vs_envelope, rp / envelope);
            res.signed_vs_base = std::max(res.signed_vs_base, rm);
            res.signed_vs_lower = std::min(res.signed_vs_lower, rm / lower);
        }
    }
    return res;
}

FractionalTestFunction make_test_bump(const TimeGrid& tg, const SpaceGrid& sg,
                                      const std::vector<double>& center_x, double width_x,
                                      double center_t, double width_t) {
    require(static_cast<int>(center_x.size()) == sg.dim, "test bump: center dimension mismatch");
    require(width_x > 0.0 && width_t > 0.0, "test bump: widths must be positive");
    // support checks: strictly inside the half box and the open time interval
    for (double cx : center_x)
        require(std::abs(cx) + width_x < sg.half_width / 2.0,
                "test bump: spatial support must stay inside [-L/2, L/2]");
    require(center_t - width_t > tg.t0 + 2.0 * tg.dt_step() &&
                center_t + width_t < tg.t1 - 2.0 * tg.dt_step(),
            "test bump: time support must stay clear of the grid ends");

    FractionalTestFunction phi;
    phi.tgrid = tg;
    phi.sgrid = sg;
    phi.time_profile.assign(static_cast<std::size_t>(tg.n_nodes()), 0.0);
    for (int i = 0; i < tg.n_nodes(); ++i)
        phi.time_profile[static_cast<std::size_t>(i)] = bump((tg.node(i) - center_t) / width_t);
    // force exact zeros on the outermost two nodes at each end
    for (int i = 0; i < std::min(2, tg.n_nodes()); ++i) {
        phi.time_profile[static_cast<std::size_t>(i)] = 0.0;
        phi.time_profile[static_cast<std::size_t>(tg.n_nodes() - 1 - i)] = 0.0;
    }

    phi.space_profile = ScalarField(sg);
    std::vector<double> x(static_cast<std::size_t>(sg.dim));
    for (std::int64_t i = 0; i < sg.size(); ++i) {
        sg.point(i, x.data());
        double r2 = 0.0;
        for (int kk = 0; kk < sg.dim; ++kk) {
            double dxk = (x[static_cast<std::size_t>(kk)] - center_x[static_cast<std::size_t>(kk)]) / width_x;
            r2 += dxk * dxk;
        }
        phi.space_profile.values[static_cast<std::size_t>(i)] = bump(std::sqrt(r2));
    }
    return phi;
}

ScalarField fractional_laplacian(const ScalarField& phi, double alpha) {
    require(alpha > 0.0 && alpha < 2.0, "fractional laplacian: alpha in (0,2) required");
    const SpaceGrid& g = phi.grid;
    const int n = g.n_per_dim;
    const int d = g.dim;
    const double du = kPi / g.half_width;
    std::vector<std::complex<double>> buf(phi.values.begin(), phi.values.end());
    const auto dims = g.dims();
    fft::transform(buf, dims, -1);
    std::vector<int> mi(static_cast<std::size_t>(d));
    for (std::int64_t idx = 0; idx < g.size(); ++idx) {
        g.unflatten(idx, mi.data());
        double u2 = 0.0;
        for (int k = 0; k < d; ++k) {
            int ks = mi[static_cast<std::size_t>(k)] < n / 2 ? mi[static_cast<std::size_t>(k)]
                                                             : mi[static_cast<std::size_t>(k)] - n;
            double u = ks * du;
            u2 += u * u;
        }
        buf[static_cast<std::size_t>(idx)] *= -std::pow(u2, 0.5 * alpha);
    }
    fft::transform(buf, dims, +1);
    ScalarField out(g);
    double scale = 1.0 / static_cast<double>(g.size());
    double max_in = 0.0;
    for (double v : phi.values) max_in = std::max(max_in, std::abs(v));
    double worst_imag = 0.0;
    for (std::int64_t idx = 0; idx < g.size(); ++idx) {
        out.values[static_cast<std::size_t>(idx)] = buf[static_cast<std::size_t>(idx)].real() * scale;
        worst_imag = std::max(worst_imag, std::abs(buf[static_cast<std::size_t>(idx)].imag()) * scale);
    }
    if (worst_imag > 1e-12 * std::max(max_in, 1.0))
        throw aliasing_error("fractional laplacian: imaginary residue beyond tolerance");
    return out;
}

double fundamental_solution_residual(const ForwardKernel& kernel, const JumpKernel* j,
                                     const FractionalTestFunction& phi, double alpha, int s_node,
                                     std::int64_t x_idx) {
    const TimeGrid& tg = kernel.tgrid;
    const SpaceGrid& sg = kernel.sgrid;
    require(phi.tgrid.n_steps == tg.n_steps && phi.sgrid == sg,
            "fundamental solution residual: grids must match");
    require(s_node >= 0 && s_node < tg.n_nodes(), "fundamental solution residual: bad s node");
    require(x_idx >= 0 && x_idx < sg.size(), "fundamental solution residual: bad x index");
    require(phi.time_profile.front() == 0.0 && phi.time_profile.back() == 0.0,
            "fundamental solution residual: phi must vanish at the time boundary");

    const int T = tg.n_nodes();
    const double dt = tg.dt_step();
    const double vol = sg.cell_volume();

    // separable pieces: Lap^{a/2} g once, J g once
    ScalarField lap_g = fractional_laplacian(phi.space_profile, alpha);
    std::vector<double> jg;
    if (j != nullptr) {
        require(j->translation_invariant, "fundamental solution residual: profile jumps only");
        // J phi(y) = int j(y, w) phi(w) dw; profile is radial so correlation
        // equals convolution, but flip explicitly to keep it general
        const int n = sg.n_per_dim;
        std::vector<double> flipped(static_cast<std::size_t>(sg.size()));
        std::vector<int> mi(static_cast<std::size_t>(sg.dim)), mo(static_cast<std::size_t>(sg.dim));
        for (std::int64_t o = 0; o < sg.size(); ++o) {
            sg.unflatten(o, mi.data());
            for (int k = 0; k < sg.dim; ++k)
                mo[static_cast<std::size_t>(k)] = (n - mi[static_cast<std::size_t>(k)]) % n;
            flipped[static_cast<std::size_t>(sg.flatten(mo.data()))] =
                j->profile[static_cast<std::size_t>(o)];
        }
        auto g_off = position_to_offset(sg, phi.space_profile.values);
        auto conv = fft::circular_convolve(g_off, flipped, sg.dims());
        for (double& v : conv) v *= vol;
        jg = offset_to_position(sg, conv);
    }

    // d_t psi: centered differences inside, one-sided at the ends
    std::vector<double> dpsi(static_cast<std::size_t>(T), 0.0);
    for (int i = 0; i < T; ++i) {
        if (i == 0)
            dpsi[0] = (phi.time_profile[1] - phi.time_profile[0]) / dt;
        else if (i == T - 1)
            dpsi[static_cast<std::size_t>(i)] =
                (phi.time_profile[static_cast<std::size_t>(i)] -
                 phi.time_profile[static_cast<std::size_t>(i - 1)]) / dt;
        else
            dpsi[static_cast<std::size_t>(i)] =
                (phi.time_profile[static_cast<std::size_t>(i + 1)] -
                 phi.time_profile[static_cast<std::size_t>(i - 1)]) / (2.0 * dt);
    }

    // integrand field at node m: d_t phi + Lap phi + J phi
    double acc = 0.0;
    for (int m = s_node + 1; m < T; ++m) {
        const double psi = phi.time_profile[static_cast<std::size_t>(m)];
        const double dps = dpsi[static_cast<std::size_t>(m)];
        if (psi == 0.0 && dps == 0.0) continue;
        double inner = 0.0;
        if (kernel.rep == ForwardKernel::Rep::stationary) {
            const auto& slice = kernel.slices[static_cast<std::size_t>(m - s_node - 1)];
            for (std::int64_t y = 0; y < sg.size(); ++y) {
                double f = dps * phi.space_profile.values[static_cast<std::size_t>(y)] +
                           psi * lap_g.values[static_cast<std::size_t>(y)];
                if (j != nullptr) f += psi * jg[static_cast<std::size_t>(y)];
                inner += slice[static_cast<std::size_t>(sg.offset_index(x_idx, y))] * f;
            }
        } else {
            for (std::int64_t y = 0; y < sg.size(); ++y) {
                double f = dps * phi.space_profile.values[static_cast<std::size_t>(y)] +
                           psi * lap_g.values[static_cast<std::size_t>(y)];
                if (j != nullptr) f += psi * jg[static_cast<std::size_t>(y)];
                inner += kernel.value(s_node, x_idx, m, y) * f;
            }
        }
        acc += inner * vol * dt;
    }

    const double phi_sx = phi.time_profile[static_cast<std::size_t>(s_node)] *
                          phi.space_profile.values[static_cast<std::size_t>(x_idx)];
    return std::abs(acc + phi_sx);
}

}  // namespace kp
