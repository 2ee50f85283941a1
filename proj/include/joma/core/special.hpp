#pragma once

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "quadrature.hpp"

namespace joma::num {

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

// Closed-form starting point refined by Halley steps; the erfc form is used
// for |y| > 0.5 so that 1 - y keeps its digits near the tails.
inline double erf_inv(double y)
{
    if (!(std::abs(y) < 1.0)) throw domain_error("erf_inv: |y| must be < 1");
    if (y == 0.0) return 0.0;
    if (y < 0.0) return -erf_inv(-y);

    constexpr double a = 0.147;
    const double ln = std::log1p(-y * y);
    const double t = 2.0 / (std::numbers::pi * a) + 0.5 * ln;
    double x = std::sqrt(std::sqrt(t * t - ln / a) - t);

    const double tail = 1.0 - y;
    for (int it = 0; it < 12; ++it) {
        const double f = y > 0.5 ? tail - std::erfc(x) : std::erf(x) - y;
        const double fp = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        if (fp == 0.0) break;
        const double step = f / (fp + x * f);
        x -= step;
        if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

// g(y) = (1 - exp(-y^2)) / y, g(0) = 0.
inline double g_func(double y)
{
    if (!(y >= 0.0)) throw domain_error("g_func: y must be >= 0");
    if (y == 0.0) return 0.0;
    return -std::expm1(-y * y) / y;
}

// G(y) = exp(-y^2/2) * integral_0^y exp(x^2/2) dx.
inline double G_func(double y, const QuadratureSpec& spec = {1e-14, 1e-12, 2000, 12.0})
{
    if (!(y >= 0.0)) throw domain_error("G_func: y must be >= 0");
    if (y == 0.0) return 0.0;
    const double y2 = y * y;
    return integrate([y2](double x) { return std::exp(0.5 * (x * x - y2)); }, {0.0, y}, spec);
}

} // namespace joma::num
