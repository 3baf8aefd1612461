#pragma once

// Iterative radix-2 complex FFT for power-of-two lengths, applied along
// each axis of a row-major d-dimensional array. No global state: twiddle
// tables live on the stack of the call.

#include <complex>
#include <cstddef>
#include <vector>

namespace shellmax::fft {

using cd = std::complex<double>;

namespace detail {

inline void fft_pow2(cd* a, int n, bool inverse, const std::vector<cd>& tw) {
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < half; ++k) {
                cd w = tw[static_cast<std::size_t>(k) * step];
                if (inverse) w = std::conj(w);
                const cd u = a[i + k];
                const cd v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / n;
        for (int i = 0; i < n; ++i) a[i] *= inv;
    }
}

inline std::vector<cd> twiddles(int n) {
    // w[k] = e^{-2 pi i k / n}
    std::vector<cd> tw(static_cast<std::size_t>(n) / 2);
    for (std::size_t k = 0; k < tw.size(); ++k) {
        const double ang = -2.0 * M_PI * static_cast<double>(k) / n;
        tw[k] = cd(std::cos(ang), std::sin(ang));
    }
    return tw;
}

}  // namespace detail

// In-place transform of every axis of a d-dimensional row-major array with
// n samples per axis. Forward uses the e^{-2 pi i} kernel; inverse divides
// by n per axis.
inline void transform(cd* data, int dim, int n, bool inverse) {
    const auto tw = detail::twiddles(n);
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(n);
    std::vector<cd> line(static_cast<std::size_t>(n));
    std::size_t stride = 1;  // axis dim-1 is contiguous
    for (int axis = dim - 1; axis >= 0; --axis) {
        const std::size_t block = stride * static_cast<std::size_t>(n);
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                cd* p = data + base + off;
                if (stride == 1) {
                    detail::fft_pow2(p, n, inverse, tw);
                } else {
                    for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = p[stride * static_cast<std::size_t>(i)];
                    detail::fft_pow2(line.data(), n, inverse, tw);
                    for (int i = 0; i < n; ++i) p[stride * static_cast<std::size_t>(i)] = line[static_cast<std::size_t>(i)];
                }
            }
        }
        stride *= static_cast<std::size_t>(n);
    }
}

}  // namespace shellmax::fft
