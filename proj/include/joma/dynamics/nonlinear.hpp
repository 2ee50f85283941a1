#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/quadrature.hpp"
#include "joma/core/radial.hpp"
#include "joma/core/types.hpp"
#include "reduced.hpp"
#include "theta.hpp"

namespace joma::dyn {

struct MixtureComponent {
    RealVector center;   // x_bar_c over the M_C contextual tokens
    double coefficient;  // a_c = E[g | c] P[c]
    num::RadialDensity density;
};

// Isotropic mixture seen by one hidden node for query `query`. The noise of every
// component is isotropic in the full M_C-dimensional space.
struct MixtureSpec {
    std::vector<MixtureComponent> components;
    int query = 0;

    Eigen::Index dim() const { return components.empty() ? 0 : components.front().center.size(); }

    void validate() const
    {
        if (components.empty()) throw domain_error("MixtureSpec: need at least one component");
        bool any = false;
        for (const auto& c : components) {
            if (c.center.size() != dim()) throw domain_error("MixtureSpec: centers differ in dimension");
            if ((c.center.array() < 0).any()) throw domain_error("MixtureSpec: negative center entry");
            require_finite(c.center, "MixtureSpec.center");
            require_finite(c.coefficient, "MixtureSpec.coefficient");
            if (c.density.dim() != dim()) throw domain_error("MixtureSpec: density dimension must equal M_C");
            any |= c.coefficient != 0.0;
        }
        if (!any) throw domain_error("MixtureSpec: all coefficients are zero");
    }
};

struct NonlinearRates {
    RealVector vdot;
    double xidot = 0.0;
};

// E[x psi(v^T x + xi)] weighted by a_c, and E[g psi] for the bias:
//   v' = sum_c a_c [theta_1(r_c; s) x_bar_c + theta_2(r_c; s) v / s],  xi' = sum_c a_c theta_1(r_c; s)
// with s = |v| and theta(r; s) = int psi(s y + r) p_n(y) dy.
inline NonlinearRates nonlinear_rates(const RealVector& v, double xi, const MixtureSpec& mix,
                                      const ActivationDerivative& psi, const num::QuadratureSpec& spec = {})
{
    if (v.size() != mix.dim()) throw domain_error("delta_nonlinear: dimension mismatch");
    const double s = v.norm();
    if (!(s > 0)) throw degenerate_error("delta_nonlinear: v must be nonzero");
    NonlinearRates out{RealVector::Zero(v.size()), 0.0};
    double along = 0.0;
    for (const auto& c : mix.components) {
        if (c.coefficient == 0.0) continue;
        const double r = v.dot(c.center) + xi;
        const double t1 = theta1(r, psi, c.density, spec, s);
        const double t2 = theta2(r, psi, c.density, spec, s);
        out.vdot += c.coefficient * t1 * c.center;
        along += c.coefficient * t2;
        out.xidot += c.coefficient * t1;
    }
    out.vdot += along / s * v;
    return out;
}

inline RealVector delta_nonlinear(const RealVector& v, double xi, const MixtureSpec& mix,
                                  const ActivationDerivative& psi, const num::QuadratureSpec& spec = {})
{
    return nonlinear_rates(v, xi, mix, psi, spec).vdot;
}

// One step of the full mixture dynamics on (v, xi).
inline StepResult mixture_step(const ReducedState& st, const MixtureSpec& mix, const ActivationDerivative& psi,
                               double eta, Integrator integ = Integrator::rk4, const StepGuard& guard = {},
                               const num::QuadratureSpec& spec = {})
{
    const Eigen::Index n = st.v.size();
    auto f = [&](const RealVector& y) {
        auto rates = nonlinear_rates(y.head(n), y(n), mix, psi, spec);
        RealVector out(n + 1);
        out.head(n) = rates.vdot;
        out(n) = rates.xidot;
        return out;
    };
    RealVector y(n + 1);
    y.head(n) = st.v;
    y(n) = st.xi;
    return guarded_step(f, y, eta, integ, guard, n);
}

// sum_c a_c F(r_c / |v|); vanishes at stationary points when psi is homogeneous.
inline double critical_residual(const RealVector& v, double xi, const MixtureSpec& mix,
                                const ActivationDerivative& psi, const num::QuadratureSpec& spec = {})
{
    const double s = v.norm();
    if (!(s > 0)) throw degenerate_error("critical_residual: v must be nonzero");
    double sum = 0.0;
    for (const auto& c : mix.components)
        if (c.coefficient != 0.0) sum += c.coefficient * F_of_r((v.dot(c.center) + xi) / s, psi, c.density, spec);
    return sum;
}

struct StationaryPoint {
    RealVector v;  // unit norm
    double xi = 0.0;
    double a_plus = 0.0;
    double a_minus = 0.0;
    double field_norm = 0.0;  // |(v', xi')|_inf at the point
};

// Stationary points of a two-component mixture (centers x_plus, x_minus, shared density)
// with a_plus fixed and a_minus free. With lambda = theta_2 / theta_1 they satisfy
// v ∥ ±(x_plus - x_minus) and lambda(r_minus) - lambda(r_plus) = r_plus - r_minus.
// Roots are bracketed on a grid of r_minus and refined by bisection.
inline std::vector<StationaryPoint> two_component_stationary_points(
    const RealVector& x_plus, const RealVector& x_minus, const num::RadialDensity& density,
    const ActivationDerivative& psi, double a_plus, double r_lo, double r_hi, int grid = 200,
    const num::QuadratureSpec& spec = {})
{
    if (x_plus.size() != x_minus.size()) throw domain_error("stationary points: dimension mismatch");
    const RealVector d = x_plus - x_minus;
    const double dn = d.norm();
    if (!(dn > 0)) throw degenerate_error("stationary points: centers coincide");
    if (a_plus == 0.0) throw domain_error("stationary points: a_plus must be nonzero");

    auto lambda = [&](double r) -> std::optional<double> {
        const double t1 = theta1(r, psi, density, spec);
        if (!(t1 > 1e-12)) return std::nullopt;
        return theta2(r, psi, density, spec) / t1;
    };

    std::vector<StationaryPoint> out;
    for (double orient : {1.0, -1.0}) {
        const double s = orient * dn;  // r_plus - r_minus
        auto H = [&](double rm) -> std::optional<double> {
            auto lm = lambda(rm), lp = lambda(rm + s);
            if (!lm || !lp) return std::nullopt;
            return *lm - *lp - s;
        };
        double prev_x = r_lo;
        std::optional<double> prev = H(prev_x);
        for (int i = 1; i <= grid; ++i) {
            const double x = r_lo + (r_hi - r_lo) * i / grid;
            auto cur = H(x);
            if (prev && cur && ((*prev < 0) != (*cur < 0))) {
                double lo = prev_x, hi = x, flo = *prev;
                bool ok = true;
                for (int it = 0; it < 80 && ok; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    auto fm = H(mid);
                    if (!fm) {
                        ok = false;
                        break;
                    }
                    if ((*fm < 0) == (flo < 0)) {
                        lo = mid;
                        flo = *fm;
                    } else {
                        hi = mid;
                    }
                }
                if (ok) {
                    const double rm = 0.5 * (lo + hi), rp = rm + s;
                    StationaryPoint sp;
                    sp.v = orient * d / dn;
                    sp.xi = rm - sp.v.dot(x_minus);
                    sp.a_plus = a_plus;
                    sp.a_minus = -a_plus * theta1(rp, psi, density, spec) / theta1(rm, psi, density, spec);
                    MixtureSpec mix{{{x_plus, sp.a_plus, density}, {x_minus, sp.a_minus, density}}, 0};
                    auto rates = nonlinear_rates(sp.v, sp.xi, mix, psi, spec);
                    sp.field_norm = std::max(rates.vdot.cwiseAbs().maxCoeff(), std::abs(rates.xidot));
                    out.push_back(sp);
                }
            }
            prev_x = x;
            prev = cur;
        }
    }
    return out;
}

} // namespace joma::dyn
