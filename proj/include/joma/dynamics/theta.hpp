#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/quadrature.hpp"
#include "joma/core/radial.hpp"

namespace joma::dyn {

// psi = phi', the derivative of the MLP activation.
struct ActivationDerivative {
    enum class Kind { step, leaky_step, tabulated };

    Kind kind = Kind::step;
    double c_minus = 0.0;
    double c_plus = 1.0;
    std::vector<double> grid, values;  // tabulated: linear in between, constant outside

    static ActivationDerivative step() { return {Kind::step, 0.0, 1.0, {}, {}}; }

    static ActivationDerivative leaky_step(double c_minus, double c_plus)
    {
        if (!std::isfinite(c_minus) || !std::isfinite(c_plus)) throw domain_error("leaky_step: non-finite slope");
        return {Kind::leaky_step, c_minus, c_plus, {}, {}};
    }

    static ActivationDerivative tabulated(std::vector<double> grid, std::vector<double> values)
    {
        if (grid.size() < 2 || grid.size() != values.size()) throw domain_error("tabulated psi: size mismatch");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) throw domain_error("tabulated psi: grid must be increasing");
        return {Kind::tabulated, values.front(), values.back(), std::move(grid), std::move(values)};
    }

    // Logistic sigmoid sampled on [-lim, lim]: the derivative of softplus.
    static ActivationDerivative sigmoid_like(double lim = 12.0, int points = 481)
    {
        std::vector<double> g(points), v(points);
        for (int i = 0; i < points; ++i) {
            g[i] = -lim + 2 * lim * i / (points - 1);
            v[i] = 1.0 / (1.0 + std::exp(-g[i]));
        }
        return tabulated(std::move(g), std::move(v));
    }

    // phi(x) = phi'(x) x holds for step and leaky step.
    bool homogeneous() const { return kind != Kind::tabulated; }

    double operator()(double y) const
    {
        if (kind != Kind::tabulated) return y < 0 ? c_minus : c_plus;
        if (y <= grid.front()) return values.front();
        if (y >= grid.back()) return values.back();
        auto it = std::upper_bound(grid.begin(), grid.end(), y);
        const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
        const double w = (y - grid[i]) / (grid[i + 1] - grid[i]);
        return (1 - w) * values[i] + w * values[i + 1];
    }

    std::string name() const
    {
        switch (kind) {
        case Kind::step: return "step";
        case Kind::leaky_step: return "leaky-step";
        case Kind::tabulated: return "tabulated";
        }
        return "?";
    }
};

namespace detail {

// integral over y of psi(sigma*y + r) * y^power * p_n(y)
inline double theta_moment(int power, double r, const ActivationDerivative& psi, const num::RadialDensity& p,
                           const num::QuadratureSpec& spec, double sigma)
{
    if (!(sigma > 0)) throw domain_error("theta: scale must be > 0");
    if (!std::isfinite(r)) throw domain_error("theta: r must be finite");
    const double S = p.support(spec);
    std::vector<double> br = p.marginal_breaks();
    auto weight = [&](double y) { return (power == 0 ? 1.0 : y) * p.marginal(y); };

    if (psi.kind != ActivationDerivative::Kind::tabulated) {
        const double y0 = std::clamp(-r / sigma, -S, S);
        double lower = 0.0, upper = 0.0;
        if (psi.c_minus != 0.0) lower = num::integrate(weight, {-S, y0}, spec, br);
        if (psi.c_plus != 0.0) upper = num::integrate(weight, {y0, S}, spec, br);
        return psi.c_minus * lower + psi.c_plus * upper;
    }
    for (double g : psi.grid) br.push_back((g - r) / sigma);
    return num::integrate([&](double y) { return psi(sigma * y + r) * weight(y); }, {-S, S}, spec, br);
}

} // namespace detail

// theta_1(r) = int psi(sigma y + r) p_n(y) dy; sigma = 1 gives the lemma's definition.
inline double theta1(double r, const ActivationDerivative& psi, const num::RadialDensity& p,
                     const num::QuadratureSpec& spec = {}, double sigma = 1.0)
{
    return detail::theta_moment(0, r, psi, p, spec, sigma);
}

// theta_2(r) = int y psi(sigma y + r) p_n(y) dy
inline double theta2(double r, const ActivationDerivative& psi, const num::RadialDensity& p,
                     const num::QuadratureSpec& spec = {}, double sigma = 1.0)
{
    return detail::theta_moment(1, r, psi, p, spec, sigma);
}

// F(r) = theta_2(0) + int_0^r theta_1
inline double F_of_r(double r, const ActivationDerivative& psi, const num::RadialDensity& p,
                     const num::QuadratureSpec& spec = {})
{
    if (!psi.homogeneous()) throw domain_error("F_of_r: psi must be step or leaky step");
    num::QuadratureSpec outer = spec;
    outer.abs_tol = std::max(spec.abs_tol, 1e-11);
    outer.rel_tol = std::max(spec.rel_tol, 1e-11);
    const double area = num::integrate([&](double s) { return theta1(s, psi, p, spec); }, {0.0, r}, outer);
    return theta2(0.0, psi, p, spec) + area;
}

} // namespace joma::dyn
