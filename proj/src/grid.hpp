#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace kp {

// Uniform time grid on [t0, t1] with n_steps intervals (n_steps + 1 nodes).
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    int n_steps = 1;

    double dt_step() const { return (t1 - t0) / n_steps; }
    int n_nodes() const { return n_steps + 1; }
    double node(int i) const { return t0 + i * dt_step(); }
    double lag(int l) const { return l * dt_step(); }
};

TimeGrid make_time_grid(double t0, double t1, int n);

// Uniform lattice {-L + i*(2L/n) : 0 <= i < n}^d on the torus [-L, L)^d.
struct SpaceGrid {
    int dim = 1;
    double half_width = 1.0;
    int n_per_dim = 2;

    double spacing() const { return 2.0 * half_width / n_per_dim; }
    double cell_volume() const { return std::pow(spacing(), dim); }
    std::int64_t size() const {
        std::int64_t s = 1;
        for (int k = 0; k < dim; ++k) s *= n_per_dim;
        return s;
    }
    std::vector<int> dims() const { return std::vector<int>(dim, n_per_dim); }

    // Multi-index <-> flat (row major).
    void unflatten(std::int64_t idx, int* out) const {
        for (int k = dim - 1; k >= 0; --k) {
            out[k] = static_cast<int>(idx % n_per_dim);
            idx /= n_per_dim;
        }
    }
    std::int64_t flatten(const int* mi) const {
        std::int64_t idx = 0;
        for (int k = 0; k < dim; ++k) idx = idx * n_per_dim + mi[k];
        return idx;
    }

    // Coordinates of lattice point with flat index idx.
    void point(std::int64_t idx, double* out) const {
        int mi[8];
        unflatten(idx, mi);
        for (int k = 0; k < dim; ++k) out[k] = -half_width + mi[k] * spacing();
    }

    // Displacement vector of an offset index, wrapped to [-L, L) per axis.
    void offset_displacement(std::int64_t offset_idx, double* out) const {
        int mi[8];
        unflatten(offset_idx, mi);
        for (int k = 0; k < dim; ++k) {
            double w = mi[k] * spacing();
            if (mi[k] >= n_per_dim / 2) w -= 2.0 * half_width;
            out[k] = w;
        }
    }
    double offset_norm(std::int64_t offset_idx) const {
        double w[8];
        offset_displacement(offset_idx, w);
        double s = 0;
        for (int k = 0; k < dim; ++k) s += w[k] * w[k];
        return std::sqrt(s);
    }
    double point_norm(std::int64_t idx) const {
        double x[8];
        point(idx, x);
        double s = 0;
        for (int k = 0; k < dim; ++k) s += x[k] * x[k];
        return std::sqrt(s);
    }

    // Offset index of (y - x) on the torus for flat point indices x, y.
    std::int64_t offset_index(std::int64_t x_idx, std::int64_t y_idx) const {
        int mx[8], my[8], mo[8];
        unflatten(x_idx, mx);
        unflatten(y_idx, my);
        for (int k = 0; k < dim; ++k) mo[k] = (my[k] - mx[k] + n_per_dim) % n_per_dim;
        return flatten(mo);
    }
    // y index such that y - x == offset (torus addition).
    std::int64_t shift_index(std::int64_t x_idx, std::int64_t offset_idx) const {
        int mx[8], mo[8], my[8];
        unflatten(x_idx, mx);
        unflatten(offset_idx, mo);
        for (int k = 0; k < dim; ++k) my[k] = (mx[k] + mo[k]) % n_per_dim;
        return flatten(my);
    }

    bool operator==(const SpaceGrid& o) const {
        return dim == o.dim && half_width == o.half_width && n_per_dim == o.n_per_dim;
    }
};

SpaceGrid make_space_grid(int d, double half_width, int n);

// Test-only escape hatch: builds a grid without the even-n requirement.
// Periodic FFT paths assume even n; plain tensor arithmetic does not care.
SpaceGrid make_space_grid_unchecked(int d, double half_width, int n);

// Scalar values sampled on the lattice points of a SpaceGrid.
struct ScalarField {
    SpaceGrid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const SpaceGrid& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.size()), fill) {}
};

double integrate(const ScalarField& f);

// Two storage layouts are used for lattice data: "position" layout indexes by
// the lattice point (x = -L + i h), "offset" layout indexes by displacement
// (w = o h wrapped to [-L, L), so o = 0 is the origin). Offset layout is the
// natural one for circular convolution; the two differ by an n/2 shift per
// axis.
std::vector<double> position_to_offset(const SpaceGrid& g, const std::vector<double>& values);
std::vector<double> offset_to_position(const SpaceGrid& g, const std::vector<double>& values);

// Mass of |values| outside the centered box [-L/2, L/2]^d; used as the
// wrap-around diagnostic for torus-truncated densities.
double mass_outside_half_box(const ScalarField& f);

}  // namespace kp
