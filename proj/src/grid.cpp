#include "grid.hpp"

#include <cmath>

namespace kp {

TimeGrid make_time_grid(double t0, double t1, int n) {
    require(std::isfinite(t0) && std::isfinite(t1), "time grid: bounds must be finite");
    require(t0 < t1, "time grid: t0 < t1 required");
    require(n >= 1, "time grid: n_steps >= 1 required");
    return TimeGrid{t0, t1, n};
}

SpaceGrid make_space_grid(int d, double half_width, int n) {
    require(d >= 1 && d <= 8, "space grid: dim must be in [1, 8]");
    require(std::isfinite(half_width) && half_width > 0, "space grid: half width must be positive");
    require(n >= 2, "space grid: n_per_dim >= 2 required");
    require(n % 2 == 0, "space grid: n_per_dim must be even");
    return SpaceGrid{d, half_width, n};
}

SpaceGrid make_space_grid_unchecked(int d, double half_width, int n) {
    require(d >= 1 && d <= 8 && half_width > 0 && n >= 1, "space grid: bad parameters");
    return SpaceGrid{d, half_width, n};
}

double integrate(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.cell_volume();
}

namespace {
std::vector<double> shifted(const SpaceGrid& g, const std::vector<double>& values, int shift) {
    require(values.size() == static_cast<std::size_t>(g.size()), "layout shift: size mismatch");
    std::vector<double> out(values.size());
    const int n = g.n_per_dim;
    std::vector<int> mi(g.dim);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, mi.data());
        for (int k = 0; k < g.dim; ++k) mi[k] = (mi[k] + shift) % n;
        out[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(g.flatten(mi.data()))];
    }
    return out;
}
}  // namespace

std::vector<double> position_to_offset(const SpaceGrid& g, const std::vector<double>& values) {
    return shifted(g, values, g.n_per_dim / 2);
}

std::vector<double> offset_to_position(const SpaceGrid& g, const std::vector<double>& values) {
    return shifted(g, values, g.n_per_dim / 2);
}

double mass_outside_half_box(const ScalarField& f) {
    const double lim = f.grid.half_width / 2.0;
    double x[8];
    double s = 0.0;
    for (std::int64_t i = 0; i < f.grid.size(); ++i) {
        f.grid.point(i, x);
        bool outside = false;
        for (int k = 0; k < f.grid.dim; ++k)
            if (std::abs(x[k]) > lim) outside = true;
        if (outside) s += std::abs(f.values[static_cast<std::size_t>(i)]);
    }
    return s * f.grid.cell_volume();
}

}  // namespace kp
