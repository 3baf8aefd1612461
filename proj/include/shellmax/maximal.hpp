#pragma once

// Maximal operators on periodic grids: Hardy-Littlewood over dyadic cubes,
// the strong (rectangle) maximal function, the annulus-average maximal
// operators over lacunary and multi-parameter dilation ranges, and the
// frequency-band variants.
//
// Window sums for the cube/rectangle operators are built by index doubling,
// which keeps them bit-exact under cyclic shifts of the input.

#include <algorithm>
#include <cmath>
#include <functional>

#include "shellmax/annulus.hpp"
#include "shellmax/grid.hpp"
#include "shellmax/littlewood_paley.hpp"
#include "shellmax/spectral.hpp"

namespace shellmax {

struct DilationRange {
    // Closed per-axis exponent intervals [lo, hi].
    std::vector<std::pair<int, int>> axes;

    static DilationRange isotropic(int d, int kmin, int kmax) {
        return DilationRange{std::vector<std::pair<int, int>>(static_cast<std::size_t>(d), {kmin, kmax})};
    }
    static DilationRange box(int d, int kmin, int kmax) { return isotropic(d, kmin, kmax); }
    bool empty() const {
        for (auto [lo, hi] : axes)
            if (lo > hi) return true;
        return axes.empty();
    }
    std::size_t count() const {
        std::size_t c = 1;
        for (auto [lo, hi] : axes) c *= static_cast<std::size_t>(hi - lo + 1);
        return c;
    }
};

namespace detail {

// Sum over the forward window [x, x + 2^m) along one axis, by doubling.
inline void axis_window_sum(std::vector<double>& v, const GridSpec& g, int axis, int m_from, int m_to) {
    // doubles the window from 2^m_from to 2^m_to along the given axis
    std::vector<int> idx(g.dim);
    std::vector<double> next(v.size());
    for (int m = m_from; m < m_to; ++m) {
        const int shiftc = 1 << m;
        for (std::size_t c = 0; c < v.size(); ++c) {
            unflatten(g, c, idx);
            idx[axis] = wrap_index(idx[axis] + shiftc, g.n);
            next[c] = v[c] + v[flat_index(g, idx)];
        }
        v.swap(next);
    }
}

// Centred mean from a forward-window sum: window [x - 2^{m-1}, x + 2^{m-1}).
inline void centre_window(std::vector<double>& v, const GridSpec& g, const std::vector<int>& m_per_axis) {
    std::vector<int> idx(g.dim);
    std::vector<double> out(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) {
        unflatten(g, c, idx);
        for (int a = 0; a < g.dim; ++a) idx[a] = wrap_index(idx[a] - (1 << m_per_axis[a]) / 2, g.n);
        out[c] = v[flat_index(g, idx)];
    }
    v.swap(out);
}

}  // namespace detail

// Hardy-Littlewood maximal function over centred cubic windows of dyadic
// side length (2^m cells, m = 0..log2 n).
inline Field hl_max(const Field& f) {
    const GridSpec& g = f.grid;
    const int q = g.log2_n();
    Field out = make_field(g);
    std::vector<double> sums(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) sums[c] = std::abs(f.values[c]);
    for (std::size_t c = 0; c < f.size(); ++c) out.values[c] = sums[c];  // m = 0 window
    for (int m = 1; m <= q; ++m) {
        for (int a = 0; a < g.dim; ++a) detail::axis_window_sum(sums, g, a, m - 1, m);
        std::vector<double> centred = sums;
        detail::centre_window(centred, g, std::vector<int>(static_cast<std::size_t>(g.dim), m));
        const double inv = std::ldexp(1.0, -m * g.dim);
        for (std::size_t c = 0; c < f.size(); ++c) out.values[c] = std::max(out.values[c], centred[c] * inv);
    }
    return out;
}

// Strong maximal function: centred axis-parallel rectangles with dyadic
// side lengths chosen independently per axis.
inline Field strong_rect_max(const Field& f) {
    const GridSpec& g = f.grid;
    const int q = g.log2_n();
    Field out = make_field(g, -kInfinity);

    std::vector<int> m_per_axis(static_cast<std::size_t>(g.dim), 0);
    std::function<void(int, std::vector<double>&)> walk = [&](int axis, std::vector<double>& sums) {
        if (axis == g.dim) {
            std::vector<double> centred = sums;
            detail::centre_window(centred, g, m_per_axis);
            int mtot = 0;
            for (int a = 0; a < g.dim; ++a) mtot += m_per_axis[a];
            const double inv = std::ldexp(1.0, -mtot);
            for (std::size_t c = 0; c < f.size(); ++c) out.values[c] = std::max(out.values[c], centred[c] * inv);
            return;
        }
        std::vector<double> mine = sums;
        for (int m = 0; m <= q; ++m) {
            m_per_axis[axis] = m;
            if (m > 0) detail::axis_window_sum(mine, g, axis, m - 1, m);
            walk(axis + 1, mine);
        }
        m_per_axis[axis] = 0;
    };
    std::vector<double> base(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) base[c] = std::abs(f.values[c]);
    walk(0, base);
    return out;
}

namespace detail {

inline void pointwise_abs_max(Field& acc, const Field& u) {
    for (std::size_t c = 0; c < acc.size(); ++c) acc.values[c] = std::max(acc.values[c], std::abs(u.values[c]));
}

template <typename Fn>
inline void for_each_kvec(const DilationRange& r, Fn&& fn) {
    const int d = static_cast<int>(r.axes.size());
    std::vector<int> k(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) k[static_cast<std::size_t>(a)] = r.axes[static_cast<std::size_t>(a)].first;
    while (true) {
        fn(k);
        int a = d - 1;
        while (a >= 0 && k[static_cast<std::size_t>(a)] == r.axes[static_cast<std::size_t>(a)].second) {
            k[static_cast<std::size_t>(a)] = r.axes[static_cast<std::size_t>(a)].first;
            --a;
        }
        if (a < 0) break;
        ++k[static_cast<std::size_t>(a)];
    }
}

}  // namespace detail

// Lacunary annulus maximal operator: sup over isotropic dyadic dilations
// k = kmin..kmax of |f *_delta sigma_k|.
inline Field lacunary_max(const Field& f, double delta, int kmin, int kmax, KernelCache* cache = nullptr) {
    if (kmin > kmax) throw std::invalid_argument("lacunary_max: empty dilation range");
    KernelCache local;
    KernelCache& kc = cache ? *cache : local;
    Field acc = make_field(f.grid);
    for (int k = kmin; k <= kmax; ++k) {
        Field u = delta_convolve(f, AnnulusSpec::isotropic(f.grid.dim, delta, k), &kc);
        detail::pointwise_abs_max(acc, u);
    }
    return acc;
}

// Strong annulus maximal operator: sup over a per-axis box of dilation
// exponents of |f *_delta sigma_kvec|.
inline Field strong_max(const Field& f, double delta, const DilationRange& r, KernelCache* cache = nullptr) {
    if (static_cast<int>(r.axes.size()) != f.grid.dim)
        throw std::invalid_argument("strong_max: range dimension mismatch");
    if (r.empty()) throw std::invalid_argument("strong_max: empty dilation range");
    KernelCache local;
    KernelCache& kc = cache ? *cache : local;
    Field acc = make_field(f.grid);
    detail::for_each_kvec(r, [&](const std::vector<int>& k) {
        Field u = delta_convolve(f, AnnulusSpec{f.grid.dim, delta, k}, &kc);
        detail::pointwise_abs_max(acc, u);
    });
    return acc;
}

namespace detail {

// Mixed tensor band window at physical frequencies: axis i carries the
// low-pass profile when j_i = 0 and the band profile at scale k_i - j_i
// otherwise. Summing over 0 <= j_i <= J telescopes to a per-axis plateau.
inline std::vector<double> tensor_band_window(const GridSpec& g, std::span<const int> jvec,
                                              std::span<const int> kvec) {
    std::vector<double> w(g.cell_count(), 1.0);
    std::vector<int> idx(g.dim);
    for (std::size_t c = 0; c < w.size(); ++c) {
        unflatten(g, c, idx);
        double v = 1.0;
        for (int a = 0; a < g.dim; ++a) {
            const double xi = signed_index(idx[a], g.n) / g.box_length;
            const double scaled = std::ldexp(std::abs(xi), kvec[a] - jvec[a]);
            v *= (jvec[a] == 0) ? lowpass_profile(std::ldexp(std::abs(xi), kvec[a])) : band_profile(scaled);
        }
        w[c] = v;
    }
    return w;
}

}  // namespace detail

// Frequency-band annulus average: f * (tensor window at k - j) *_delta sigma_k.
inline Field band_operator(const Field& f, std::span<const int> jvec, std::span<const int> kvec,
                           double delta, KernelCache* cache = nullptr) {
    const GridSpec& g = f.grid;
    if (static_cast<int>(jvec.size()) != g.dim || static_cast<int>(kvec.size()) != g.dim)
        throw std::invalid_argument("band_operator: vector dimension mismatch");
    for (int a = 0; a < g.dim; ++a) {
        if (jvec[a] < 0) throw std::invalid_argument("band_operator: j components must be >= 0");
        if (jvec[a] > 0) {
            // band support must reach the lattice: 2^{j-k-1} <= n/(2L)
            const double lo = std::ldexp(1.0, jvec[a] - kvec[a] - 1);
            if (lo > g.n / (2.0 * g.box_length))
                throw std::invalid_argument("band_operator: band outside grid resolution");
        }
    }
    KernelCache local;
    KernelCache& kc = cache ? *cache : local;
    const SpectralField& Khat = kc.kernel_hat(g, AnnulusSpec{g.dim, delta, std::vector<int>(kvec.begin(), kvec.end())});
    const std::vector<double> w = detail::tensor_band_window(g, jvec, kvec);
    SpectralField F = forward_transform(f);
    for (std::size_t c = 0; c < F.coeffs.size(); ++c) F.coeffs[c] *= w[c] * Khat.coeffs[c];
    return inverse_transform(F);
}

// Band maximal operator: sup over the dilation box of |band_operator|.
inline Field band_max(const Field& f, std::span<const int> jvec, double delta, const DilationRange& r,
                      KernelCache* cache = nullptr) {
    if (r.empty()) throw std::invalid_argument("band_max: empty dilation range");
    KernelCache local;
    KernelCache& kc = cache ? *cache : local;
    Field acc = make_field(f.grid);
    detail::for_each_kvec(r, [&](const std::vector<int>& k) {
        Field u = band_operator(f, jvec, k, delta, &kc);
        detail::pointwise_abs_max(acc, u);
    });
    return acc;
}

}  // namespace shellmax
