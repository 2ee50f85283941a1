#pragma once

#include <algorithm>
#include <vector>

#include "errors.hpp"

namespace joma::num {

// Cubic spline through (x_i, y_i), zero slope at the left end, natural at the right.
class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y))
    {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw domain_error("CubicSpline: need matching x/y with n >= 2");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw domain_error("CubicSpline: x must be increasing");
        // Tridiagonal system for second derivatives m_i.
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        const double h0 = x_[1] - x_[0];
        b[0] = h0 / 3.0;
        c[0] = h0 / 6.0;
        d[0] = (y_[1] - y_[0]) / h0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
            a[i] = hl / 6.0;
            b[i] = (hl + hr) / 3.0;
            c[i] = hr / 6.0;
            d[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
        }
        b[n - 1] = 1.0;
        d[n - 1] = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m_.assign(n, 0.0);
        m_[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }

    const std::vector<double>& knots() const { return x_; }

    double operator()(double t) const
    {
        if (t <= x_.front()) return y_.front();
        if (t >= x_.back()) return y_.back();
        auto it = std::upper_bound(x_.begin(), x_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
        return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
    }

private:
    std::vector<double> x_, y_, m_;
};

} // namespace joma::num
