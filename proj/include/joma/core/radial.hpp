#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "spline.hpp"

namespace joma::num {

enum class RadialKind { standard_gaussian, uniform_ball, custom };

// Surface area of the sphere of radius r in R^n (n = 1 gives the two endpoints).
inline double sphere_area(int n, double r)
{
    const double c = n * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    return n == 1 ? c : c * std::pow(r, n - 1);
}

inline double ball_volume(int n, double r)
{
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(r, n);
}

// Isotropic density p(x) = p0(|x|) on R^n, with its one-dimensional marginal p_n.
class RadialDensity {
public:
    static RadialDensity standard_gaussian(int n)
    {
        RadialDensity d(RadialKind::standard_gaussian, n);
        return d;
    }

    static RadialDensity uniform_ball(int n, double radius)
    {
        if (!(radius > 0)) throw domain_error("uniform_ball: radius must be > 0");
        RadialDensity d(RadialKind::uniform_ball, n);
        d.radius_ = radius;
        return d;
    }

    // p0 tabulated on an increasing grid starting at 0, linear in between, zero past the end.
    static RadialDensity custom(int n, std::vector<double> grid, std::vector<double> p0)
    {
        RadialDensity d(RadialKind::custom, n);
        if (grid.size() < 2 || grid.size() != p0.size()) throw domain_error("custom density: grid/value size mismatch");
        if (grid.front() != 0.0) throw domain_error("custom density: grid must start at 0");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!std::isfinite(grid[i]) || !std::isfinite(p0[i])) throw domain_error("custom density: non-finite entry");
            if (p0[i] < 0) throw domain_error("custom density: negative density");
            if (i > 0 && !(grid[i] > grid[i - 1])) throw domain_error("custom density: grid must be increasing");
        }
        d.grid_ = std::move(grid);
        d.p0_ = std::move(p0);
        d.radius_ = d.grid_.back();
        const double mass = d.total_mass();
        if (std::abs(mass - 1.0) > 1e-6)
            throw domain_error("custom density: integrates to " + std::to_string(mass) + ", expected 1");
        if (n > 1) {
            std::vector<double> m(d.grid_.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = d.slice_marginal(d.grid_[i]);
            d.marginal_table_ = CubicSpline(d.grid_, std::move(m));
        }
        return d;
    }

    // Samples f on a uniform grid and rescales it to unit mass.
    template <class F>
    static RadialDensity custom_from(int n, F&& f, double r_end, int points)
    {
        std::vector<double> grid(points), vals(points);
        for (int i = 0; i < points; ++i) {
            grid[i] = r_end * i / (points - 1);
            vals[i] = f(grid[i]);
        }
        RadialDensity raw(RadialKind::custom, n);
        raw.grid_ = grid;
        raw.p0_ = vals;
        raw.radius_ = r_end;
        const double mass = raw.total_mass();
        if (!(mass > 0)) throw degenerate_error("custom density: zero mass");
        for (auto& v : vals) v /= mass;
        return custom(n, std::move(grid), std::move(vals));
    }

    RadialKind kind() const { return kind_; }
    int dim() const { return n_; }
    double radius() const { return radius_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return p0_; }

    // Radius beyond which the density vanishes (or is negligible, for the Gaussian).
    double support(const QuadratureSpec& spec = {}) const
    {
        return kind_ == RadialKind::standard_gaussian ? spec.r_max : radius_;
    }

    double p0(double rho) const
    {
        rho = std::abs(rho);
        switch (kind_) {
        case RadialKind::standard_gaussian:
            return std::pow(2 * std::numbers::pi, -0.5 * n_) * std::exp(-0.5 * rho * rho);
        case RadialKind::uniform_ball:
            return rho <= radius_ ? 1.0 / ball_volume(n_, radius_) : 0.0;
        case RadialKind::custom: {
            if (rho >= grid_.back()) return rho == grid_.back() ? p0_.back() : 0.0;
            auto it = std::upper_bound(grid_.begin(), grid_.end(), rho);
            const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
            const double w = (rho - grid_[i]) / (grid_[i + 1] - grid_[i]);
            return (1 - w) * p0_[i] + w * p0_[i + 1];
        }
        }
        return 0.0;
    }

    // Marginal density of y = e^T x for any unit e. For the custom variant the
    // surface-area integral is evaluated at the grid radii and splined.
    double marginal(double y) const
    {
        y = std::abs(y);
        if (kind_ == RadialKind::standard_gaussian) return std::exp(-0.5 * y * y) / std::sqrt(2 * std::numbers::pi);
        if (n_ == 1) return p0(y);
        const double R = radius_;
        if (y >= R) return 0.0;
        // integral over the (n-1)-dim slice: int_0^sqrt(R^2-y^2) S_{n-1}(l) p0(sqrt(y^2+l^2)) dl
        auto slice = [&](double l) { return sphere_area(n_ - 1, l) * p0(std::sqrt(y * y + l * l)); };
        if (kind_ == RadialKind::uniform_ball) return integrate(slice, {0.0, std::sqrt(R * R - y * y)});
        return std::max(0.0, marginal_table_(y));
    }

    // Points where the marginal may lose smoothness; useful as quadrature breakpoints.
    std::vector<double> marginal_breaks() const
    {
        std::vector<double> b;
        if (kind_ == RadialKind::standard_gaussian) return b;
        if (kind_ == RadialKind::uniform_ball) return {-radius_, radius_};
        for (std::size_t i = grid_.size(); i-- > 1;) b.push_back(-grid_[i]);
        for (double g : grid_) b.push_back(g);
        return b;
    }

    // Surface-area formula for the marginal of the tabulated density, evaluated
    // segment by segment (the integrand is smooth between grid radii).
    double slice_marginal(double y) const
    {
        y = std::abs(y);
        if (n_ == 1) return p0(y);
        if (y >= radius_) return 0.0;
        auto slice = [&](double l) { return sphere_area(n_ - 1, l) * p0(std::sqrt(y * y + l * l)); };
        double total = 0.0;
        double l_prev = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if (grid_[i] <= y) continue;
            const double l = std::sqrt(grid_[i] * grid_[i] - y * y);
            total += detail::gk21(slice, l_prev, l).value;
            l_prev = l;
        }
        return total;
    }

    // S_n-weighted radial integral of p0; 1 for a valid density.
    double total_mass() const
    {
        if (kind_ != RadialKind::custom) return 1.0;
        auto f = [&](double r) { return sphere_area(n_, r) * p0(r); };
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i) total += detail::gk21(f, grid_[i], grid_[i + 1]).value;
        return total;
    }

private:
    RadialDensity(RadialKind k, int n) : kind_(k), n_(n)
    {
        if (n < 1) throw domain_error("radial density: dimension must be >= 1");
    }

    RadialKind kind_;
    int n_;
    double radius_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> p0_;
    CubicSpline marginal_table_;
};

} // namespace joma::num
