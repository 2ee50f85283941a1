#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace joma::num {

struct QuadratureSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
    double r_max = 12.0;  // infinite endpoints are replaced by ±r_max

    void validate() const
    {
        if (!(abs_tol > 0) || !(rel_tol > 0)) throw domain_error("quadrature: tolerances must be > 0");
        if (!(r_max > 0)) throw domain_error("quadrature: r_max must be > 0");
        if (max_subdivisions < 1) throw domain_error("quadrature: max_subdivisions must be >= 1");
    }
};

// Endpoints may be ±infinity.
struct Interval {
    double lo;
    double hi;
};

inline constexpr double infinity = std::numeric_limits<double>::infinity();

namespace detail {

// 21-point Kronrod abscissae and weights with the embedded 10-point Gauss rule.
inline constexpr std::array<double, 11> gk_x = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> gk_w = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478400, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> g_w = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(F& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * gk_w[10];
    double gauss = 0.0;
    double abs_sum = std::abs(kron);
    std::array<double, 10> f1{}, f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = h * gk_x[j];
        f1[j] = f(c - dx);
        f2[j] = f(c + dx);
        const double s = f1[j] + f2[j];
        kron += gk_w[j] * s;
        abs_sum += gk_w[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) gauss += g_w[j / 2] * s;
    }
    const double mean = 0.5 * kron;
    double asc = gk_w[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) asc += gk_w[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

    const double value = kron * h;
    const double res_abs = abs_sum * std::abs(h);
    const double res_asc = asc * std::abs(h);
    double err = std::abs((kron - gauss) * h);
    if (res_asc != 0.0 && err != 0.0) err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (res_abs > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(50 * eps * res_abs, err);
    if (!std::isfinite(value)) throw domain_error("integrate: integrand is not finite on the domain");
    return {a, b, value, err};
}

} // namespace detail

// Adaptive Gauss-Kronrod (21 point) with global bisection of the worst segment.
// `breaks` are interior points where f may be discontinuous.
template <class F>
double integrate(F&& f, Interval dom, const QuadratureSpec& spec = {}, std::span<const double> breaks = {})
{
    spec.validate();
    double lo = std::isinf(dom.lo) ? (dom.lo < 0 ? -spec.r_max : spec.r_max) : dom.lo;
    double hi = std::isinf(dom.hi) ? (dom.hi < 0 ? -spec.r_max : spec.r_max) : dom.hi;
    if (std::isnan(lo) || std::isnan(hi)) throw domain_error("integrate: NaN endpoint");
    double sign = 1.0;
    if (hi < lo) {
        std::swap(lo, hi);
        sign = -1.0;
    }
    if (hi == lo) return 0.0;

    std::vector<double> pts{lo};
    for (double p : breaks)
        if (p > lo && p < hi) pts.push_back(p);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());

    std::priority_queue<detail::Segment> heap;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] == pts[i]) continue;
        auto s = detail::gk21(f, pts[i], pts[i + 1]);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }

    int splits = 0;
    while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (splits >= spec.max_subdivisions)
            throw convergence_error("integrate: no convergence after " + std::to_string(splits) +
                                    " subdivisions (error estimate " + std::to_string(total_err) + ")");
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Segment cannot be split further in double precision; accept its estimate.
            total_err -= worst.error;
            worst.error = 0.0;
            heap.push(worst);
            if (total_err <= 0) break;
            continue;
        }
        auto left = detail::gk21(f, worst.a, mid);
        auto right = detail::gk21(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
        // Refresh sums periodically to limit cancellation drift.
        if (splits % 64 == 0) {
            auto copy = heap;
            total = 0.0;
            total_err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                total_err += copy.top().error;
                copy.pop();
            }
        }
    }
    return sign * total;
}

} // namespace joma::num
