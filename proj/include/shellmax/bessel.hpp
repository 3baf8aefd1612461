#pragma once

// Bessel functions of the first kind for integer and half-integer orders,
// nonnegative arguments. Two-regime evaluation: ascending power series for
// x <= max(12, 2*nu), Hankel large-argument expansion with optimal
// truncation beyond.

#include <cmath>
#include <stdexcept>
#include <string>

namespace shellmax {

struct BesselOrder {
    int twice_order = 0;  // nu = twice_order / 2

    static BesselOrder integer(int nu) { return BesselOrder{2 * nu}; }
    static BesselOrder half(int twice) { return BesselOrder{twice}; }
    double value() const { return 0.5 * twice_order; }
};

namespace detail {

inline double bessel_series(double nu, double x) {
    // J_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_m (-1)^m (x^2/4)^m / (m! (nu+1)_m)
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < 400; ++m) {
        term *= -q / (m * (nu + m));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    double lead;
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    // log form avoids overflow of the intermediate for larger nu
    lead = std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
    return lead * sum;
}

inline double bessel_hankel(double nu, double x) {
    // J_nu(x) ~ sqrt(2/(pi x)) [P cos w - Q sin w], w = x - nu pi/2 - pi/4,
    // with P, Q the even/odd parts of the a_k/x^k series, truncated at the
    // smallest term.
    const double mu = 4.0 * nu * nu;
    double P = 1.0, Q = 0.0;
    double ak = 1.0;            // a_k / x^k running value
    double prev = 1e308;
    int phase = 0;              // k mod 4 drives the sign pattern
    for (int k = 1; k <= 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        ak *= (mu - odd * odd) / (8.0 * k * x);
        const double mag = std::abs(ak);
        if (mag > prev) break;  // divergence point reached
        prev = mag;
        phase = k & 3;
        switch (phase) {
            case 1: Q += ak; break;
            case 2: P -= ak; break;
            case 3: Q -= ak; break;
            case 0: P += ak; break;
        }
        if (mag < 1e-18) break;
    }
    const double w = x - (0.5 * nu + 0.25) * M_PI;
    return std::sqrt(2.0 / (M_PI * x)) * (P * std::cos(w) - Q * std::sin(w));
}

}  // namespace detail

inline double bessel_j(BesselOrder order, double x) {
    if (order.twice_order < 0) throw std::invalid_argument("bessel_j: order must be >= 0");
    if (x < 0.0) throw std::invalid_argument("bessel_j: negative argument");
    const double nu = order.value();
    const double split = std::max(12.0, 2.0 * nu);
    if (x <= split) return detail::bessel_series(nu, x);
    return detail::bessel_hankel(nu, x);
}

}  // namespace shellmax
