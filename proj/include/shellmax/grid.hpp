#pragma once

// Periodic sampling lattice and real-valued fields on it.
//
// A grid is a d-dimensional torus with n samples per axis (n a power of
// two) and physical side length box_length. Fields are stored row-major,
// axis 0 slowest. All index arithmetic wraps modulo n per axis.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellmax {

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

struct GridSpec {
    int dim = 0;
    int n = 0;
    double box_length = 0.0;

    double spacing() const { return box_length / n; }
    std::size_t cell_count() const {
        std::size_t c = 1;
        for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(n);
        return c;
    }
    double cell_volume() const { return std::pow(spacing(), dim); }
    int log2_n() const {
        int q = 0;
        while ((1 << q) < n) ++q;
        return q;
    }
    bool operator==(const GridSpec&) const = default;
};

inline GridSpec make_grid(int dim, int n, double box_length) {
    if (dim < 1 || dim > 4)
        throw std::invalid_argument("make_grid: dim must be in [1,4], got " + std::to_string(dim));
    if (n < 4 || !is_power_of_two(n))
        throw std::invalid_argument("make_grid: n must be a power of two >= 4, got " + std::to_string(n));
    if (!(box_length > 0.0) || !std::isfinite(box_length))
        throw std::invalid_argument("make_grid: box_length must be positive and finite");
    return GridSpec{dim, n, box_length};
}

struct Field {
    GridSpec grid;
    std::vector<double> values;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

inline Field make_field(const GridSpec& g, double fill = 0.0) {
    return Field{g, std::vector<double>(g.cell_count(), fill)};
}

inline int wrap_index(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

// Row-major flat index from per-axis indices (wrapped).
inline std::size_t flat_index(const GridSpec& g, std::span<const int> idx) {
    std::size_t f = 0;
    for (int a = 0; a < g.dim; ++a) f = f * g.n + static_cast<std::size_t>(wrap_index(idx[a], g.n));
    return f;
}

inline void unflatten(const GridSpec& g, std::size_t f, std::span<int> idx) {
    for (int a = g.dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(f % g.n);
        f /= g.n;
    }
}

// Signed periodic representative of a cell index, in [-n/2, n/2).
inline int signed_index(int i, int n) { return i < n / 2 ? i : i - n; }

// Physical coordinate of the signed representative.
inline double signed_coordinate(const GridSpec& g, int i) {
    return signed_index(i, g.n) * g.spacing();
}

inline void require_finite(const Field& f, const char* where) {
    for (double v : f.values)
        if (!std::isfinite(v)) throw std::runtime_error(std::string(where) + ": non-finite field value");
}

inline void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (!(a.grid == b.grid)) throw std::invalid_argument(std::string(where) + ": mismatched grids");
}

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Discrete L^p quadrature norm: (sum |f|^p h^d)^{1/p}, max-norm for p = inf.
inline double lp_norm(const Field& f, double p) {
    if (p == kInfinity) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0.0;
    if (p == 2.0) {
        for (double v : f.values) s += v * v;
    } else if (p == 1.0) {
        for (double v : f.values) s += std::abs(v);
    } else {
        for (double v : f.values) s += std::pow(std::abs(v), p);
    }
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

// Measure of the strict superlevel set {f > lambda}.
inline double level_measure(const Field& f, double lambda) {
    std::size_t count = 0;
    for (double v : f.values)
        if (v > lambda) ++count;
    return static_cast<double>(count) * f.grid.cell_volume();
}

// Direct periodic convolution, O(N^2). Oracle for the spectral path;
// guarded to small grids.
inline Field direct_convolve(const Field& f, const Field& g) {
    require_same_grid(f, g, "direct_convolve");
    const GridSpec& gr = f.grid;
    const std::size_t total = gr.cell_count();
    if (total > (1u << 16))
        throw std::invalid_argument("direct_convolve: grid too large for the direct oracle");
    Field out = make_field(gr);
    std::vector<int> xi(gr.dim), yi(gr.dim), di(gr.dim);
    const double hv = gr.cell_volume();
    for (std::size_t x = 0; x < total; ++x) {
        unflatten(gr, x, xi);
        double acc = 0.0;
        for (std::size_t y = 0; y < total; ++y) {
            unflatten(gr, y, yi);
            for (int a = 0; a < gr.dim; ++a) di[a] = xi[a] - yi[a];
            acc += f.values[y] * g.values[flat_index(gr, di)];
        }
        out.values[x] = acc * hv;
    }
    return out;
}

// Cyclic shift by whole cells: out(x) = f(x - s).
inline Field shift_cells(const Field& f, std::span<const int> s) {
    const GridSpec& g = f.grid;
    Field out = make_field(g);
    std::vector<int> xi(g.dim), yi(g.dim);
    for (std::size_t x = 0; x < f.size(); ++x) {
        unflatten(g, x, xi);
        for (int a = 0; a < g.dim; ++a) yi[a] = xi[a] - s[a];
        out.values[x] = f.values[flat_index(g, yi)];
    }
    return out;
}

}  // namespace shellmax
