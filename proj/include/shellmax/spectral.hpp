#pragma once

// Discrete Fourier transforms on the periodic grid with the physical
// normalisation
//   F(m) = h^d sum_x f(x) e^{-2 pi i x . (m/L)},
// so that F approximates the continuum transform at frequency xi = m/L and
// Parseval reads sum |f|^2 h^d = L^{-d} sum |F|^2. Coefficients are stored
// in FFT order; coeff_centred() indexes by frequencies in [-n/2, n/2).

#include <complex>
#include <map>
#include <span>

#include "shellmax/annulus.hpp"
#include "shellmax/fft.hpp"
#include "shellmax/grid.hpp"

namespace shellmax {

struct SpectralField {
    GridSpec grid;
    std::vector<std::complex<double>> coeffs;  // FFT order, row-major

    std::complex<double> coeff_centred(std::span<const int> m) const {
        std::size_t f = 0;
        for (int a = 0; a < grid.dim; ++a) f = f * grid.n + static_cast<std::size_t>(wrap_index(m[a], grid.n));
        return coeffs[f];
    }
};

inline SpectralField forward_transform(const Field& f) {
    SpectralField F{f.grid, std::vector<std::complex<double>>(f.size())};
    for (std::size_t i = 0; i < f.size(); ++i) F.coeffs[i] = f.values[i];
    fft::transform(F.coeffs.data(), f.grid.dim, f.grid.n, false);
    const double hv = f.grid.cell_volume();
    for (auto& c : F.coeffs) c *= hv;
    return F;
}

inline Field inverse_transform(const SpectralField& F) {
    std::vector<std::complex<double>> buf = F.coeffs;
    fft::transform(buf.data(), F.grid.dim, F.grid.n, true);
    Field f = make_field(F.grid);
    const double scale = 1.0 / F.grid.cell_volume();
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = buf[i].real() * scale;
    return f;
}

// Periodic convolution via the convolution theorem; exact match to
// direct_convolve up to rounding.
inline Field fft_convolve(const Field& f, const Field& g) {
    require_same_grid(f, g, "fft_convolve");
    SpectralField F = forward_transform(f);
    const SpectralField G = forward_transform(g);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) F.coeffs[i] *= G.coeffs[i];
    return inverse_transform(F);
}

// Cache of rasterised kernel transforms, keyed per (grid, spec). Owned by
// the caller; safe to share read-only across threads once populated.
class KernelCache {
  public:
    const SpectralField& kernel_hat(const GridSpec& g, const AnnulusSpec& s) {
        Key key{g.n, g.dim, g.box_length, s.delta, s.kvec};
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            Field K = rasterize_annulus(g, s);
            it = cache_.emplace(std::move(key), forward_transform(K)).first;
        }
        return it->second;
    }
    std::size_t size() const { return cache_.size(); }

  private:
    struct Key {
        int n;
        int dim;
        double box;
        double delta;
        std::vector<int> kvec;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, SpectralField> cache_;
};

// The annulus average f *_delta sigma_k: convolution with the unit-mass
// rasterised kernel. For nonnegative f the output is clamped to the exact
// range [0, max f] that averaging guarantees.
inline Field delta_convolve(const Field& f, const AnnulusSpec& s, KernelCache* cache = nullptr) {
    KernelCache local;
    KernelCache& kc = cache ? *cache : local;
    const SpectralField& Khat = kc.kernel_hat(f.grid, s);
    SpectralField F = forward_transform(f);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) F.coeffs[i] *= Khat.coeffs[i];
    Field out = inverse_transform(F);

    double lo = kInfinity, hi = -kInfinity;
    for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo >= 0.0) {
        for (double& v : out.values) v = std::min(std::max(v, 0.0), hi);
    }
    return out;
}

}  // namespace shellmax
