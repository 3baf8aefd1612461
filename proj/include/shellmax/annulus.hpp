#pragma once

// Annulus specifications, exact measures, and rasterised unit-mass kernels
// on periodic grids.
//
// An AnnulusSpec describes the set {y : 1-delta < |2^{-k} y| < 1+delta}
// with per-axis dilation exponents k. Rasterisation samples cell centres;
// when the grid resolves the shell thickness the kernel is an exact
// membership indicator, otherwise each cell near the ring is weighted by
// its radial coverage fraction so that sub-cell shells still produce a
// well-populated ring. Either way the kernel is renormalised to unit mass.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "shellmax/grid.hpp"
#include "shellmax/radial.hpp"

namespace shellmax {

struct AnnulusSpec {
    int dim = 0;
    double delta = 0.0;
    std::vector<int> kvec;

    static AnnulusSpec isotropic(int d, double delta, int k) {
        return AnnulusSpec{d, delta, std::vector<int>(static_cast<std::size_t>(d), k)};
    }
    int min_k() const { return *std::min_element(kvec.begin(), kvec.end()); }
    int max_k() const { return *std::max_element(kvec.begin(), kvec.end()); }
    int sum_k() const { return std::accumulate(kvec.begin(), kvec.end(), 0); }
    bool operator==(const AnnulusSpec&) const = default;
};

inline void validate_annulus(const AnnulusSpec& s) {
    if (!(s.delta > 0.0 && s.delta < 0.5))
        throw std::invalid_argument("AnnulusSpec: delta outside (0, 1/2)");
    if (static_cast<int>(s.kvec.size()) != s.dim)
        throw std::invalid_argument("AnnulusSpec: kvec length != dim");
    if (s.dim < 2 || s.dim > 4) throw std::invalid_argument("AnnulusSpec: dim must be in [2,4]");
}

// |C^delta(0,1)| = omega_d ((1+delta)^d - (1-delta)^d).
inline double annulus_measure(int d, double delta) {
    if (d < 2) throw std::invalid_argument("annulus_measure: d must be >= 2");
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("annulus_measure: delta outside (0, 1/2)");
    return unit_ball_volume(d) * (std::pow(1.0 + delta, d) - std::pow(1.0 - delta, d));
}

// Fit: the dilated annulus must sit inside the box with margin at least
// its own diameter on each side.
inline bool annulus_fits(const GridSpec& g, const AnnulusSpec& s) {
    for (int a = 0; a < s.dim; ++a) {
        const double extent = 2.0 * std::ldexp(1.0, s.kvec[a]) * (1.0 + s.delta);
        if (3.0 * extent > g.box_length) return false;
    }
    return true;
}

// Ring resolution: every axis radius must span at least two cells,
// otherwise the rasterised set degenerates.
inline bool ring_resolved(const GridSpec& g, const AnnulusSpec& s) {
    for (int a = 0; a < s.dim; ++a)
        if (std::ldexp(1.0, s.kvec[a]) < 2.0 * g.spacing()) return false;
    return true;
}

// Shell resolution: h <= delta 2^{min k} / 4, i.e. the shell thickness
// itself spans several cells and plain membership sampling is faithful.
inline bool shell_resolved(const GridSpec& g, const AnnulusSpec& s) {
    return g.spacing() <= s.delta * std::ldexp(1.0, s.min_k()) / 4.0;
}

// Rasterised kernel with unit mass: sum K h^d = 1 exactly after
// renormalisation. Throws if the spec does not fit the box or the ring is
// under-resolved.
inline Field rasterize_annulus(const GridSpec& g, const AnnulusSpec& s) {
    validate_annulus(s);
    if (g.dim != s.dim) throw std::invalid_argument("rasterize_annulus: dim mismatch");
    if (!annulus_fits(g, s))
        throw std::invalid_argument("rasterize_annulus: annulus does not fit the periodic box");
    if (!ring_resolved(g, s))
        throw std::invalid_argument("rasterize_annulus: h too coarse, ring under-resolved");

    const bool membership = shell_resolved(g, s);
    const double lo = 1.0 - s.delta, hi = 1.0 + s.delta;
    Field K = make_field(g);
    std::vector<int> idx(g.dim);
    std::vector<double> z(g.dim), e(g.dim);
    for (int a = 0; a < g.dim; ++a) e[a] = 0.5 * g.spacing() * std::ldexp(1.0, -s.kvec[a]);

    double mass = 0.0;
    for (std::size_t c = 0; c < K.size(); ++c) {
        unflatten(g, c, idx);
        double t2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            z[a] = signed_coordinate(g, idx[a]) * std::ldexp(1.0, -s.kvec[a]);
            t2 += z[a] * z[a];
        }
        const double t = std::sqrt(t2);
        double w = 0.0;
        if (membership) {
            w = (t > lo && t < hi) ? 1.0 : 0.0;
        } else if (t > 0.0) {
            // radial half-extent of the cell image, projected on the ray
            double rad = 0.0;
            for (int a = 0; a < g.dim; ++a) rad += e[a] * std::abs(z[a]) / t;
            const double ov = std::min(t + rad, hi) - std::max(t - rad, lo);
            if (ov > 0.0) w = std::min(1.0, ov / (2.0 * rad));
        }
        K.values[c] = w;
        mass += w;
    }
    if (mass <= 0.0)
        throw std::invalid_argument("rasterize_annulus: empty rasterisation, h too coarse");
    const double scale = 1.0 / (mass * g.cell_volume());
    for (double& v : K.values) v *= scale;
    return K;
}

// Diagnostic bound for |W* + (2^k delta)-neighbourhood of the dilated
// sphere|, simplified to 2^{kd} (delta + 2^{lW - k}).
inline double sumset_volume_bound(int level_w, int k, double delta, int d) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("sumset_volume_bound: delta outside (0, 1/2)");
    return std::ldexp(1.0, k * d) * (delta + std::ldexp(1.0, level_w - k));
}

}  // namespace shellmax
