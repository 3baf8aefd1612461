#pragma once

// Frequency-side partition of unity and the square-function machinery
// built on it.
//
// All windows are constructed in frequency from one radial profile eta:
// smooth, identically 1 on [0,1], identically 0 on [2,inf). Band b of a
// family carries the multiplier
//     prof(|m| / 2^b) = eta(|m|/2^b) - eta(|m|/2^{b-1})
// over lattice frequency indices m, so the family telescopes exactly:
// the band sum equals eta(|m|/2^{band_max}), which is 1 on the resolved
// region. The bottom band keeps the full low-frequency plateau. Spatial
// scale of band b is 2^{q-b} cells (q = log2 n), which is also the dyadic
// cube level paired with that band downstream.

#include <cmath>
#include <deque>

#include "shellmax/grid.hpp"
#include "shellmax/spectral.hpp"

namespace shellmax {

// exp(-1/s) glue; eta is C^infinity with exact plateaus.
inline double eta_profile(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double g1 = std::exp(-1.0 / (2.0 - t));
    const double g2 = std::exp(-1.0 / (t - 1.0));
    return g1 / (g1 + g2);
}

// Band profile: 1-d bump supported on [1/2, 2], used radially and as the
// per-axis tensor window.
inline double band_profile(double t) {
    t = std::abs(t);
    return eta_profile(t) - eta_profile(2.0 * t);
}

// Low-pass profile, support [0, 2], plateau [0, 1].
inline double lowpass_profile(double t) { return eta_profile(std::abs(t)); }

struct BumpFamily {
    GridSpec grid;
    int band_min = 0;   // bottom band, keeps the DC plateau
    int band_max = 0;   // top band; resolved region is |m| <= 2^band_max

    // Per-band data over the lattice, FFT order.
    std::vector<std::vector<double>> band_mult;    // phi_hat per band
    std::vector<std::vector<double>> piece_mult;   // w_hat = phi_hat / G
    std::vector<Field> assembly_kernel;            // spatial kernel of phi_hat^2

    int bands() const { return band_max - band_min + 1; }
    int band_index(int b) const { return b - band_min; }

    // Spatial scale of band b in cells; doubles as the dyadic cube level.
    int cube_level(int b) const {
        const int q = grid.log2_n();
        if (b == band_min) return q;  // plateau band pairs with the whole box
        return std::max(0, q - b);
    }
    int ball_radius(int b) const {
        const int q = grid.log2_n();
        return std::max(1, std::min(grid.n / 2, 1 << std::min(q, cube_level(b))));
    }
};

namespace detail {

inline std::vector<double> lattice_radius(const GridSpec& g) {
    std::vector<double> r(g.cell_count());
    std::vector<int> idx(g.dim);
    for (std::size_t c = 0; c < r.size(); ++c) {
        unflatten(g, c, idx);
        double s = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double m = signed_index(idx[a], g.n);
            s += m * m;
        }
        r[c] = std::sqrt(s);
    }
    return r;
}

}  // namespace detail

inline BumpFamily build_bump_family(const GridSpec& g, int band_min, int band_max) {
    const int q = g.log2_n();
    if (band_min < 0 || band_max > q - 1 || band_min >= band_max)
        throw std::invalid_argument("build_bump_family: unresolvable scale bounds");
    BumpFamily fam;
    fam.grid = g;
    fam.band_min = band_min;
    fam.band_max = band_max;

    const std::vector<double> rad = detail::lattice_radius(g);
    const std::size_t total = g.cell_count();

    fam.band_mult.resize(static_cast<std::size_t>(fam.bands()));
    for (int b = band_min; b <= band_max; ++b) {
        std::vector<double>& m = fam.band_mult[static_cast<std::size_t>(fam.band_index(b))];
        m.resize(total);
        const double scale = std::ldexp(1.0, -b);
        if (b == band_min) {
            for (std::size_t c = 0; c < total; ++c) m[c] = lowpass_profile(rad[c] * scale);
        } else {
            for (std::size_t c = 0; c < total; ++c) m[c] = band_profile(rad[c] * scale);
        }
    }

    // G = sum_b phi_hat^3; piece windows w = phi_hat / G make
    // sum_b phi_hat^2 w = 1 wherever any band is active.
    std::vector<double> G(total, 0.0);
    for (const auto& m : fam.band_mult)
        for (std::size_t c = 0; c < total; ++c) G[c] += m[c] * m[c] * m[c];
    fam.piece_mult.resize(fam.band_mult.size());
    for (std::size_t bi = 0; bi < fam.band_mult.size(); ++bi) {
        fam.piece_mult[bi].resize(total);
        for (std::size_t c = 0; c < total; ++c)
            fam.piece_mult[bi][c] = G[c] > 0.0 ? fam.band_mult[bi][c] / G[c] : 0.0;
    }

    fam.assembly_kernel.reserve(fam.band_mult.size());
    for (const auto& m : fam.band_mult) {
        SpectralField K{g, std::vector<std::complex<double>>(total)};
        for (std::size_t c = 0; c < total; ++c) K.coeffs[c] = m[c] * m[c];
        fam.assembly_kernel.push_back(inverse_transform(K));
    }
    return fam;
}

// f filtered by a real lattice multiplier.
inline Field apply_multiplier(const Field& f, const std::vector<double>& mult) {
    SpectralField F = forward_transform(f);
    for (std::size_t c = 0; c < F.coeffs.size(); ++c) F.coeffs[c] *= mult[c];
    return inverse_transform(F);
}

inline Field band_filter(const Field& f, const BumpFamily& fam, int b) {
    return apply_multiplier(f, fam.band_mult[static_cast<std::size_t>(fam.band_index(b))]);
}

inline Field piece_filter(const Field& f, const BumpFamily& fam, int b) {
    return apply_multiplier(f, fam.piece_mult[static_cast<std::size_t>(fam.band_index(b))]);
}

namespace detail {

// Circular sliding max with half-width s along the contiguous axis.
inline void row_max_inplace(const double* in, double* out, int n, int s) {
    if (s <= 0) {
        std::copy(in, in + n, out);
        return;
    }
    if (2 * s + 1 >= n) {
        double m = in[0];
        for (int i = 1; i < n; ++i) m = std::max(m, in[i]);
        std::fill(out, out + n, m);
        return;
    }
    // monotone deque over the wrapped range [i-s, i+s]
    std::deque<int> dq;
    auto val = [&](int j) { return in[wrap_index(j, n)]; };
    for (int j = -s; j <= s; ++j) {
        while (!dq.empty() && val(dq.back()) <= val(j)) dq.pop_back();
        dq.push_back(j);
    }
    for (int i = 0; i < n; ++i) {
        out[i] = val(dq.front());
        const int leave = i - s, enter = i + 1 + s;
        if (dq.front() == leave) dq.pop_front();
        while (!dq.empty() && val(dq.back()) <= val(enter)) dq.pop_back();
        dq.push_back(enter);
    }
}

}  // namespace detail

// Pointwise max of |u| over the discrete Euclidean ball {o : |o| < r} of
// cell offsets, periodic. r = 1 reduces to |u| itself.
inline Field ball_max_abs(const Field& u, int r) {
    const GridSpec& g = u.grid;
    Field absu = make_field(g);
    for (std::size_t c = 0; c < u.size(); ++c) absu.values[c] = std::abs(u.values[c]);
    if (r <= 1) return absu;

    const int limit = r * r - 1;  // integer offsets with |o|^2 <= r^2 - 1
    Field out = make_field(g, -kInfinity);
    const int n = g.n;
    const std::size_t rows = g.cell_count() / static_cast<std::size_t>(n);
    std::vector<double> rowbuf(static_cast<std::size_t>(n));
    std::vector<int> idx(g.dim);

    // enumerate leading-axes offsets o' with |o'|^2 <= limit
    std::vector<std::vector<int>> prefixes;
    {
        std::vector<int> cur(static_cast<std::size_t>(g.dim - 1), -(r - 1));
        if (g.dim == 1) {
            prefixes.push_back({});
        } else {
            while (true) {
                int norm2 = 0;
                for (int v : cur) norm2 += v * v;
                if (norm2 <= limit) prefixes.push_back(cur);
                int a = g.dim - 2;
                while (a >= 0 && cur[static_cast<std::size_t>(a)] == r - 1) {
                    cur[static_cast<std::size_t>(a)] = -(r - 1);
                    --a;
                }
                if (a < 0) break;
                ++cur[static_cast<std::size_t>(a)];
            }
        }
    }

    for (const auto& p : prefixes) {
        int norm2 = 0;
        for (int v : p) norm2 += v * v;
        const int s = static_cast<int>(std::floor(std::sqrt(static_cast<double>(limit - norm2))));
        for (std::size_t row = 0; row < rows; ++row) {
            unflatten(g, row * static_cast<std::size_t>(n), idx);
            for (int a = 0; a + 1 < g.dim; ++a) idx[a] = wrap_index(idx[a] + p[static_cast<std::size_t>(a)], n);
            const std::size_t src = flat_index(g, idx);
            detail::row_max_inplace(absu.values.data() + src, rowbuf.data(), n, s);
            double* dst = out.values.data() + row * static_cast<std::size_t>(n);
            for (int i = 0; i < n; ++i) dst[i] = std::max(dst[i], rowbuf[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

// S(f) = ( sum_b |phi_b * f|^2 )^{1/2}
inline Field square_function(const Field& f, const BumpFamily& fam) {
    if (!(f.grid == fam.grid)) throw std::invalid_argument("square_function: family built on another grid");
    Field acc = make_field(f.grid);
    for (int b = fam.band_min; b <= fam.band_max; ++b) {
        Field u = band_filter(f, fam, b);
        for (std::size_t c = 0; c < acc.size(); ++c) acc.values[c] += u.values[c] * u.values[c];
    }
    for (double& v : acc.values) v = std::sqrt(v);
    return acc;
}

// S_max(f): each scale contributes its running max over a ball whose
// radius matches the band's spatial scale.
inline Field peetre_square_function(const Field& f, const BumpFamily& fam) {
    Field acc = make_field(f.grid);
    for (int b = fam.band_min; b <= fam.band_max; ++b) {
        Field u = ball_max_abs(band_filter(f, fam, b), fam.ball_radius(b));
        for (std::size_t c = 0; c < acc.size(); ++c) acc.values[c] += u.values[c] * u.values[c];
    }
    for (double& v : acc.values) v = std::sqrt(v);
    return acc;
}

inline double h1_norm(const Field& f, const BumpFamily& fam) {
    return lp_norm(peetre_square_function(f, fam), 1.0);
}

// Relative L2 residual of the reconstruction sum_b K_b * w_b * f, where
// K_b has symbol phi_hat^2. Zero on the resolved region by construction.
inline double reproducing_residual(const Field& f, const BumpFamily& fam) {
    const double nf = lp_norm(f, 2.0);
    if (nf == 0.0) return 0.0;
    SpectralField F = forward_transform(f);
    std::vector<std::complex<double>> acc(F.coeffs.size(), 0.0);
    for (std::size_t bi = 0; bi < fam.band_mult.size(); ++bi) {
        const auto& m = fam.band_mult[bi];
        const auto& w = fam.piece_mult[bi];
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += m[c] * m[c] * w[c] * F.coeffs[c];
    }
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] = F.coeffs[c] - acc[c];
    Field diff = inverse_transform(SpectralField{f.grid, std::move(acc)});
    return lp_norm(diff, 2.0) / nf;
}

}  // namespace shellmax
