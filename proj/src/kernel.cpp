#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "fft.hpp"

namespace kp {

namespace {

constexpr std::int64_t kDenseLimit = 40'000'000;  // elements

void check_finite_nonneg(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x) || x < 0.0)
            throw invalid_argument_error(std::string(what) + ": entries must be finite and >= 0");
}

std::int64_t dense_elems(const TimeGrid& tg, const SpaceGrid& sg) {
    std::int64_t ts = tg.n_nodes() * sg.size();
    return ts * ts;
}

using Spectrum = std::vector<std::complex<double>>;

Spectrum spectrum_of(const std::vector<double>& v, const std::vector<int>& dims) {
    Spectrum s(v.begin(), v.end());
    fft::transform(s, dims, -1);
    return s;
}

std::vector<double> values_of(Spectrum s, const std::vector<int>& dims, double scale) {
    fft::transform(s, dims, +1);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].real() * scale;
    return out;
}

}  // namespace

bool JumpKernel::is_zero() const {
    const auto& v = translation_invariant ? profile : matrix;
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

JumpKernel make_jump_profile(const SpaceGrid& g, std::vector<double> profile_offsets) {
    require(profile_offsets.size() == static_cast<std::size_t>(g.size()),
            "jump kernel: profile size mismatch");
    check_finite_nonneg(profile_offsets, "jump kernel");
    JumpKernel j;
    j.sgrid = g;
    j.translation_invariant = true;
    j.profile = std::move(profile_offsets);
    return j;
}

JumpKernel make_jump_matrix(const SpaceGrid& g, std::vector<double> matrix) {
    require(matrix.size() == static_cast<std::size_t>(g.size() * g.size()),
            "jump kernel: matrix size mismatch");
    check_finite_nonneg(matrix, "jump kernel");
    JumpKernel j;
    j.sgrid = g;
    j.translation_invariant = false;
    j.matrix = std::move(matrix);
    return j;
}

JumpKernel make_zero_jump(const SpaceGrid& g) {
    return make_jump_profile(g, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0));
}

JumpKernel make_identity_jump(const SpaceGrid& g) {
    std::vector<double> p(static_cast<std::size_t>(g.size()), 0.0);
    p[0] = 1.0 / g.cell_volume();
    return make_jump_profile(g, std::move(p));
}

double j_norm(const JumpKernel& j) {
    const double vol = j.sgrid.cell_volume();
    if (j.translation_invariant) {
        double s = 0.0;
        for (double v : j.profile) s += v;
        return s * vol;
    }
    const std::int64_t S = j.sgrid.size();
    double row_sup = 0.0, col_sup = 0.0;
    std::vector<double> colsum(static_cast<std::size_t>(S), 0.0);
    for (std::int64_t x = 0; x < S; ++x) {
        double row = 0.0;
        for (std::int64_t y = 0; y < S; ++y) {
            double v = j.matrix[static_cast<std::size_t>(x * S + y)];
            row += v;
            colsum[static_cast<std::size_t>(y)] += v;
        }
        row_sup = std::max(row_sup, row);
    }
    for (double c : colsum) col_sup = std::max(col_sup, c);
    return std::max(row_sup, col_sup) * vol;
}

bool ForwardKernel::is_zero() const { return max_abs() == 0.0; }

double ForwardKernel::max_abs() const {
    double m = 0.0;
    if (rep == Rep::stationary) {
        for (const auto& s : slices)
            for (double v : s) m = std::max(m, std::abs(v));
    } else {
        for (double v : dense) m = std::max(m, std::abs(v));
    }
    return m;
}

ForwardKernel make_zero_kernel(const TimeGrid& tg, const SpaceGrid& sg, ForwardKernel::Rep rep) {
    ForwardKernel k;
    k.tgrid = tg;
    k.sgrid = sg;
    k.rep = rep;
    if (rep == ForwardKernel::Rep::stationary) {
        k.slices.assign(static_cast<std::size_t>(tg.n_steps),
                        std::vector<double>(static_cast<std::size_t>(sg.size()), 0.0));
    } else {
        require(dense_elems(tg, sg) <= kDenseLimit, "dense kernel too large");
        k.dense.assign(static_cast<std::size_t>(dense_elems(tg, sg)), 0.0);
    }
    return k;
}

ForwardKernel make_stationary_kernel(const TimeGrid& tg, const SpaceGrid& sg,
                                     std::vector<std::vector<double>> lag_slices,
                                     bool transition_limits) {
    require(lag_slices.size() == static_cast<std::size_t>(tg.n_steps),
            "stationary kernel: need one slice per positive lag");
    for (const auto& s : lag_slices)
        require(s.size() == static_cast<std::size_t>(sg.size()),
                "stationary kernel: slice size mismatch");
    ForwardKernel k;
    k.tgrid = tg;
    k.sgrid = sg;
    k.rep = ForwardKernel::Rep::stationary;
    k.transition_limits = transition_limits;
    k.slices = std::move(lag_slices);
    return k;
}

ForwardKernel make_dense_kernel(const TimeGrid& tg, const SpaceGrid& sg, std::vector<double> data,
                                bool transition_limits) {
    require(data.size() == static_cast<std::size_t>(dense_elems(tg, sg)),
            "dense kernel: tensor size mismatch");
    require(dense_elems(tg, sg) <= kDenseLimit, "dense kernel too large");
    const std::int64_t S = sg.size();
    const int T = tg.n_nodes();
    for (int i = 0; i < T; ++i)
        for (int j = 0; j <= i; ++j)
            for (std::int64_t x = 0; x < S; ++x)
                for (std::int64_t y = 0; y < S; ++y)
                    require(data[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)] == 0.0,
                            "dense kernel: forward structure violated (nonzero at j <= i)");
    ForwardKernel k;
    k.tgrid = tg;
    k.sgrid = sg;
    k.rep = ForwardKernel::Rep::dense;
    k.transition_limits = transition_limits;
    k.dense = std::move(data);
    return k;
}

ForwardKernel make_stable_kernel(const StableParams& params, const TimeGrid& tg,
                                 const SpaceGrid& sg, bool with_transition_limits,
                                 StableSliceFlavor flavor) {
    require(params.dim == sg.dim, "stable kernel: dimension mismatch");
    std::vector<std::vector<double>> slices(static_cast<std::size_t>(tg.n_steps));
    for (int l = 1; l <= tg.n_steps; ++l) {
        ScalarField f = flavor == StableSliceFlavor::periodized
                            ? stable_density_periodized(params, sg, tg.lag(l))
                            : stable_density_band_limited(params, sg, tg.lag(l));
        slices[static_cast<std::size_t>(l - 1)] = position_to_offset(sg, f.values);
    }
    return make_stationary_kernel(tg, sg, std::move(slices), with_transition_limits);
}

ForwardKernel expand_to_dense(const ForwardKernel& k) {
    if (k.rep == ForwardKernel::Rep::dense) return k;
    ForwardKernel out = make_zero_kernel(k.tgrid, k.sgrid, ForwardKernel::Rep::dense);
    out.transition_limits = k.transition_limits;
    const std::int64_t S = k.sgrid.size();
    const int T = k.tgrid.n_nodes();
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j) {
            const auto& slice = k.slices[static_cast<std::size_t>(j - i - 1)];
            for (std::int64_t x = 0; x < S; ++x)
                for (std::int64_t y = 0; y < S; ++y)
                    out.dense[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)] =
                        slice[static_cast<std::size_t>(k.sgrid.offset_index(x, y))];
        }
    return out;
}

void check_same_grids(const ForwardKernel& a, const ForwardKernel& b) {
    require(a.sgrid == b.sgrid && a.tgrid.t0 == b.tgrid.t0 && a.tgrid.t1 == b.tgrid.t1 &&
                a.tgrid.n_steps == b.tgrid.n_steps,
            "kernel operation: grids must match");
}

ForwardKernel compose(const ForwardKernel& a, const ForwardKernel& b) {
    check_same_grids(a, b);
    require(a.rep == b.rep, "compose: representations must match");
    const double dt = a.tgrid.dt_step();
    const double vol = a.sgrid.cell_volume();

    if (a.rep == ForwardKernel::Rep::stationary) {
        const auto dims = a.sgrid.dims();
        const std::int64_t S = a.sgrid.size();
        const int M = a.n_lags();
        std::vector<Spectrum> fa(static_cast<std::size_t>(M)), fb(static_cast<std::size_t>(M));
        for (int l = 0; l < M; ++l) {
            fa[static_cast<std::size_t>(l)] =
                spectrum_of(a.slices[static_cast<std::size_t>(l)], dims);
            fb[static_cast<std::size_t>(l)] =
                spectrum_of(b.slices[static_cast<std::size_t>(l)], dims);
        }
        ForwardKernel out = make_zero_kernel(a.tgrid, a.sgrid, a.rep);
        const double scale = dt * vol / static_cast<double>(S);
        parallel_for(M, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t l = lo; l < hi; ++l) {
                int lag = static_cast<int>(l) + 1;
                Spectrum acc(static_cast<std::size_t>(S), {0.0, 0.0});
                for (int m = 1; m < lag; ++m) {
                    const auto& A = fa[static_cast<std::size_t>(m - 1)];
                    const auto& B = fb[static_cast<std::size_t>(lag - m - 1)];
                    for (std::int64_t q = 0; q < S; ++q)
                        acc[static_cast<std::size_t>(q)] +=
                            A[static_cast<std::size_t>(q)] * B[static_cast<std::size_t>(q)];
                }
                out.slices[static_cast<std::size_t>(l)] = values_of(std::move(acc), dims, scale);
            }
        });
        return out;
    }

    const std::int64_t S = a.sgrid.size();
    const int T = a.tgrid.n_nodes();
    ForwardKernel out = make_zero_kernel(a.tgrid, a.sgrid, a.rep);
    parallel_for(T, [&](std::int64_t ilo, std::int64_t ihi) {
        for (std::int64_t i = ilo; i < ihi; ++i)
            for (int j = static_cast<int>(i) + 2; j < T; ++j)
                for (std::int64_t x = 0; x < S; ++x)
                    for (std::int64_t y = 0; y < S; ++y) {
                        double acc = 0.0;
                        for (int m = static_cast<int>(i) + 1; m < j; ++m)
                            for (std::int64_t z = 0; z < S; ++z)
                                acc += a.dense[static_cast<std::size_t>(((i * S + x) * T + m) * S +
                                                                        z)] *
                                       b.dense[static_cast<std::size_t>(((m * S + z) * T + j) * S +
                                                                        y)];
                        out.dense[static_cast<std::size_t>(((i * S + x) * T + j) * S + y)] =
                            acc * dt * vol;
                    }
    });
    return out;
}

ForwardKernel apply_jump(const ForwardKernel& k, const JumpKernel& j) {
    require(k.sgrid == j.sgrid, "apply_jump: grids must match");
    const double vol = k.sgrid.cell_volume();
    const std::int64_t S = k.sgrid.size();

    if (k.rep == ForwardKernel::Rep::stationary) {
        require(j.translation_invariant,
                "apply_jump: general jump kernels need the dense representation");
        const auto dims = k.sgrid.dims();
        Spectrum fj = spectrum_of(j.profile, dims);
        ForwardKernel out = make_zero_kernel(k.tgrid, k.sgrid, k.rep);
        const double scale = vol / static_cast<double>(S);
        parallel_for(k.n_lags(), [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t l = lo; l < hi; ++l) {
                Spectrum s = spectrum_of(k.slices[static_cast<std::size_t>(l)], dims);
                for (std::int64_t q = 0; q < S; ++q)
                    s[static_cast<std::size_t>(q)] *= fj[static_cast<std::size_t>(q)];
                out.slices[static_cast<std::size_t>(l)] = values_of(std::move(s), dims, scale);
            }
        });
        return out;
    }

    const int T = k.tgrid.n_nodes();
    ForwardKernel out = make_zero_kernel(k.tgrid, k.sgrid, k.rep);
    parallel_for(T, [&](std::int64_t ilo, std::int64_t ihi) {
        for (std::int64_t i = ilo; i < ihi; ++i)
            for (int jj = static_cast<int>(i) + 1; jj < T; ++jj)
                for (std::int64_t x = 0; x < S; ++x)
                    for (std::int64_t y = 0; y < S; ++y) {
                        double acc = 0.0;
                        for (std::int64_t z = 0; z < S; ++z)
                            acc +=
                                k.dense[static_cast<std::size_t>(((i * S + x) * T + jj) * S + z)] *
                                j.value(z, y);
                        out.dense[static_cast<std::size_t>(((i * S + x) * T + jj) * S + y)] =
                            acc * vol;
                    }
    });
    return out;
}

ForwardKernel jump_then(const JumpKernel& j, const ForwardKernel& k) {
    require(k.sgrid == j.sgrid, "jump_then: grids must match");
    const double vol = k.sgrid.cell_volume();
    const std::int64_t S = k.sgrid.size();

    if (k.rep == ForwardKernel::Rep::stationary) {
        require(j.translation_invariant,
                "jump_then: general jump kernels need the dense representation");
        // for translation-invariant j the two jump applications commute
        return apply_jump(k, j);
    }

    const int T = k.tgrid.n_nodes();
    ForwardKernel out = make_zero_kernel(k.tgrid, k.sgrid, k.rep);
    parallel_for(T, [&](std::int64_t ilo, std::int64_t ihi) {
        for (std::int64_t i = ilo; i < ihi; ++i)
            for (int jj = static_cast<int>(i) + 1; jj < T; ++jj)
                for (std::int64_t x = 0; x < S; ++x)
                    for (std::int64_t y = 0; y < S; ++y) {
                        double acc = 0.0;
                        for (std::int64_t z = 0; z < S; ++z)
                            acc += j.value(x, z) *
                                   k.dense[static_cast<std::size_t>(((i * S + z) * T + jj) * S +
                                                                    y)];
                        out.dense[static_cast<std::size_t>(((i * S + x) * T + jj) * S + y)] =
                            acc * vol;
                    }
    });
    return out;
}

ForwardKernel kjk(const ForwardKernel& k, const JumpKernel& j) {
    ForwardKernel kj = apply_jump(k, j);
    ForwardKernel out = compose(kj, k);
    if (k.transition_limits) {
        // Trapezoid endpoint terms: the composition integrand does not vanish
        // at u -> s+ (the kernel approaches the identity there, so the jump
        // fires immediately) nor at u -> t- (the jump fires on arrival).
        const double half_dt = 0.5 * k.tgrid.dt_step();
        out = axpy(half_dt, jump_then(j, k), out);
        out = axpy(half_dt, kj, out);
    }
    return out;
}

ForwardKernel axpy(double a, const ForwardKernel& x, const ForwardKernel& y) {
    check_same_grids(x, y);
    require(x.rep == y.rep, "axpy: representations must match");
    ForwardKernel out = y;
    out.transition_limits = x.transition_limits && y.transition_limits;
    if (x.rep == ForwardKernel::Rep::stationary) {
        for (std::size_t l = 0; l < out.slices.size(); ++l)
            for (std::size_t q = 0; q < out.slices[l].size(); ++q)
                out.slices[l][q] += a * x.slices[l][q];
    } else {
        for (std::size_t q = 0; q < out.dense.size(); ++q) out.dense[q] += a * x.dense[q];
    }
    return out;
}

ForwardKernel scale(double a, const ForwardKernel& x) {
    ForwardKernel out = x;
    if (x.rep == ForwardKernel::Rep::stationary) {
        for (auto& s : out.slices)
            for (double& v : s) v *= a;
    } else {
        for (double& v : out.dense) v *= a;
    }
    return out;
}

double max_entry_diff(const ForwardKernel& a, const ForwardKernel& b) {
    check_same_grids(a, b);
    double m = 0.0;
    if (a.rep == b.rep && a.rep == ForwardKernel::Rep::stationary) {
        for (std::size_t l = 0; l < a.slices.size(); ++l)
            for (std::size_t q = 0; q < a.slices[l].size(); ++q)
                m = std::max(m, std::abs(a.slices[l][q] - b.slices[l][q]));
        return m;
    }
    const ForwardKernel da = expand_to_dense(a);
    const ForwardKernel db = expand_to_dense(b);
    for (std::size_t q = 0; q < da.dense.size(); ++q)
        m = std::max(m, std::abs(da.dense[q] - db.dense[q]));
    return m;
}

double max_relative_diff(const ForwardKernel& a, const ForwardKernel& b, double floor) {
    check_same_grids(a, b);
    double m = 0.0;
    auto acc = [&](double va, double vb) {
        if (std::abs(vb) >= floor || std::abs(va) >= floor)
            m = std::max(m, std::abs(va - vb) / std::max(std::abs(vb), floor));
    };
    if (a.rep == b.rep && a.rep == ForwardKernel::Rep::stationary) {
        for (std::size_t l = 0; l < a.slices.size(); ++l)
            for (std::size_t q = 0; q < a.slices[l].size(); ++q)
                acc(a.slices[l][q], b.slices[l][q]);
        return m;
    }
    const ForwardKernel da = expand_to_dense(a);
    const ForwardKernel db = expand_to_dense(b);
    for (std::size_t q = 0; q < da.dense.size(); ++q) acc(da.dense[q], db.dense[q]);
    return m;
}

namespace {

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("kernel file: truncated");
    return v;
}

}  // namespace

void save_kernel(const ForwardKernel& k, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open kernel file for writing: " + path);
    os.write("KPKF", 4);
    put<std::uint32_t>(os, 1);  // version
    put<std::uint8_t>(os, k.rep == ForwardKernel::Rep::dense ? 1 : 0);
    put<std::uint8_t>(os, k.transition_limits ? 1 : 0);
    put<std::int32_t>(os, k.sgrid.dim);
    put<double>(os, k.sgrid.half_width);
    put<std::int32_t>(os, k.sgrid.n_per_dim);
    put<double>(os, k.tgrid.t0);
    put<double>(os, k.tgrid.t1);
    put<std::int32_t>(os, k.tgrid.n_steps);
    if (k.rep == ForwardKernel::Rep::stationary) {
        for (const auto& s : k.slices)
            os.write(reinterpret_cast<const char*>(s.data()),
                     static_cast<std::streamsize>(s.size() * sizeof(double)));
    } else {
        os.write(reinterpret_cast<const char*>(k.dense.data()),
                 static_cast<std::streamsize>(k.dense.size() * sizeof(double)));
    }
    if (!os) throw io_error("kernel file: write failed: " + path);
}

ForwardKernel load_kernel(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open kernel file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "KPKF", 4) != 0) throw io_error("kernel file: bad magic");
    if (get<std::uint32_t>(is) != 1) throw io_error("kernel file: unsupported version");
    bool dense = get<std::uint8_t>(is) != 0;
    bool limits = get<std::uint8_t>(is) != 0;
    int dim = get<std::int32_t>(is);
    double L = get<double>(is);
    int n = get<std::int32_t>(is);
    double t0 = get<double>(is);
    double t1 = get<double>(is);
    int steps = get<std::int32_t>(is);
    SpaceGrid sg = make_space_grid_unchecked(dim, L, n);
    TimeGrid tg = make_time_grid(t0, t1, steps);
    ForwardKernel k;
    k.tgrid = tg;
    k.sgrid = sg;
    k.transition_limits = limits;
    if (dense) {
        k.rep = ForwardKernel::Rep::dense;
        k.dense.resize(static_cast<std::size_t>(dense_elems(tg, sg)));
        is.read(reinterpret_cast<char*>(k.dense.data()),
                static_cast<std::streamsize>(k.dense.size() * sizeof(double)));
    } else {
        k.rep = ForwardKernel::Rep::stationary;
        k.slices.assign(static_cast<std::size_t>(steps),
                        std::vector<double>(static_cast<std::size_t>(sg.size())));
        for (auto& s : k.slices)
            is.read(reinterpret_cast<char*>(s.data()),
                    static_cast<std::streamsize>(s.size() * sizeof(double)));
    }
    if (!is) throw io_error("kernel file: truncated payload");
    return k;
}

}  // namespace kp
