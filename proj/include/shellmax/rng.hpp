#pragma once

// Counter-based deterministic random numbers and the test-field generators
// built on them.
//
// The generator is pure: value(key, counter) passes key + (counter+1) *
// 0x9E3779B97F4A7C15 through the splitmix64 finaliser. Streams derive
// sub-keys the same way, so any (seed, stream, counter) triple names one
// 64-bit word and every draw is replayable in isolation.

#include <cstdint>

#include "shellmax/littlewood_paley.hpp"
#include "shellmax/spectral.hpp"

namespace shellmax {

namespace rng {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t value(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + (counter + 1) * kGamma);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return value(mix64(seed + 0x632BE59BD9B4E019ull), stream);
}

// uniform in (0, 1]
inline double uniform(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(value(key, counter) >> 11) + 1.0) * 0x1.0p-53;
}

// standard normal via Box-Muller on counters (2c, 2c+1)
inline double gaussian(std::uint64_t key, std::uint64_t counter) {
    const double u1 = uniform(key, 2 * counter);
    const double u2 = uniform(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rng

// Band-limited Gaussian field: white noise per cell, smooth low-pass at
// lattice radius `cap` (plateau up to cap/2), zero mean, unit L2 norm.
inline Field gaussian_band_limited_field(const GridSpec& g, std::uint64_t seed, std::uint64_t stream,
                                         int cap) {
    const std::uint64_t key = rng::stream_key(seed, stream);
    Field white = make_field(g);
    for (std::size_t c = 0; c < white.size(); ++c) white.values[c] = rng::gaussian(key, c);

    SpectralField F = forward_transform(white);
    std::vector<int> idx(g.dim);
    for (std::size_t c = 0; c < F.coeffs.size(); ++c) {
        unflatten(g, c, idx);
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double m = signed_index(idx[a], g.n);
            r2 += m * m;
        }
        const double r = std::sqrt(r2);
        F.coeffs[c] *= (r == 0.0) ? 0.0 : lowpass_profile(2.0 * r / cap);
    }
    Field f = inverse_transform(F);
    const double norm = lp_norm(f, 2.0);
    if (norm > 0.0)
        for (double& v : f.values) v /= norm;
    return f;
}

// Mean-zero bump on a random dyadic cube: +1 on one half, -1 on the other,
// split along a random axis, unit L2 norm.
inline Field cube_bump_field(const GridSpec& g, std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t key = rng::stream_key(seed, stream ^ 0x9e1sull * 0ull);
    const int q = g.log2_n();
    const int lmin = 1, lmax = std::max(lmin, q - 2);
    const int level = lmin + static_cast<int>(rng::value(key, 0) % static_cast<std::uint64_t>(lmax - lmin + 1));
    const int side = 1 << level;
    const int axis = static_cast<int>(rng::value(key, 1) % static_cast<std::uint64_t>(g.dim));
    std::vector<int> corner(static_cast<std::size_t>(g.dim));
    for (int a = 0; a < g.dim; ++a)
        corner[static_cast<std::size_t>(a)] = static_cast<int>(rng::value(key, 2 + static_cast<std::uint64_t>(a)) % static_cast<std::uint64_t>(g.n));

    Field f = make_field(g);
    std::vector<int> idx(g.dim), cur(static_cast<std::size_t>(g.dim), 0);
    while (true) {
        for (int a = 0; a < g.dim; ++a) idx[a] = corner[static_cast<std::size_t>(a)] + cur[static_cast<std::size_t>(a)];
        const double sign = cur[static_cast<std::size_t>(axis)] < side / 2 ? 1.0 : -1.0;
        f.values[flat_index(g, idx)] = sign;
        int a = g.dim - 1;
        while (a >= 0 && cur[static_cast<std::size_t>(a)] == side - 1) { cur[static_cast<std::size_t>(a)] = 0; --a; }
        if (a < 0) break;
        ++cur[static_cast<std::size_t>(a)];
    }
    const double norm = lp_norm(f, 2.0);
    for (double& v : f.values) v /= norm;
    return f;
}

}  // namespace shellmax
