#pragma once

// Radial Fourier profiles of the unit-sphere surface measure and of the
// annulus indicator, with the e^{-2 pi i x.xi} convention. The sphere
// profile is normalised to 1 at zero frequency; the annulus transform is
// unnormalised, so its value at zero frequency is the annulus measure.

#include <cmath>
#include <stdexcept>

#include "shellmax/bessel.hpp"

namespace shellmax {

// Surface measure of the unit sphere S^{d-1}.
inline double sphere_surface(int d) {
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Normalised radial profile of the sphere transform:
//   sigma_hat(xi)/sigma(S^{d-1}) = Gamma(d/2) J_{(d-2)/2}(2 pi rho) / (pi rho)^{(d-2)/2}
// evaluated by its power series for small arguments so the rho -> 0 limit
// is exact.
inline double sphere_fourier(int d, double rho) {
    if (d < 2) throw std::invalid_argument("sphere_fourier: d must be >= 2");
    if (rho < 0.0) throw std::invalid_argument("sphere_fourier: rho must be >= 0");
    const double z = M_PI * rho;
    if (2.0 * z <= 1.0) {
        // sum_m (-1)^m (pi rho)^{2m} Gamma(d/2) / (m! Gamma(m + d/2))
        double term = 1.0, sum = 1.0;
        const double z2 = z * z;
        for (int m = 1; m < 40; ++m) {
            term *= -z2 / (m * (m + 0.5 * d - 1.0));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    const double nu = 0.5 * (d - 2);
    return std::tgamma(0.5 * d) * bessel_j(BesselOrder{d - 2}, 2.0 * M_PI * rho) / std::pow(z, nu);
}

// Radial transform of the indicator of the annulus {1-delta < |y| < 1+delta}:
//   chi_hat(rho) = rho^{-d/2} [ (1+delta)^{d/2} J_{d/2}(2 pi (1+delta) rho)
//                             - (1-delta)^{d/2} J_{d/2}(2 pi (1-delta) rho) ]
// which is the closed form of the radial integral
//   int_{1-delta}^{1+delta} sigma(S^{d-1}) sphere_fourier(d, r rho) r^{d-1} dr.
inline double annulus_fourier(int d, double delta, double rho) {
    if (d < 2) throw std::invalid_argument("annulus_fourier: d must be >= 2");
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("annulus_fourier: delta outside (0, 1/2)");
    if (rho < 0.0) throw std::invalid_argument("annulus_fourier: rho must be >= 0");
    const double rp = 1.0 + delta, rm = 1.0 - delta;
    if (2.0 * M_PI * rho * rp <= 1.0) {
        // series in rho^2; the m = 0 term is the annulus measure
        double sum = 0.0;
        double coeff = std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
        const double z2 = M_PI * M_PI * rho * rho;
        double pp = std::pow(rp, d), pm = std::pow(rm, d);
        for (int m = 0; m < 40; ++m) {
            const double term = coeff * (pp - pm);
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
            coeff *= -z2 / ((m + 1.0) * (m + 1.0 + 0.5 * d));
            pp *= rp * rp;
            pm *= rm * rm;
        }
        return sum;
    }
    const BesselOrder half_d{d};
    const double jp = bessel_j(half_d, 2.0 * M_PI * rp * rho);
    const double jm = bessel_j(half_d, 2.0 * M_PI * rm * rho);
    return (std::pow(rp, 0.5 * d) * jp - std::pow(rm, 0.5 * d) * jm) / std::pow(rho, 0.5 * d);
}

}  // namespace shellmax
