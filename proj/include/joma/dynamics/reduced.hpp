#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/metrics.hpp"
#include "joma/core/special.hpp"
#include "joma/core/types.hpp"
#include "trajectory.hpp"

namespace joma::dyn {

struct ReducedState {
    RealVector v;
    double xi = 0.0;
    double t = 0.0;
};

inline std::vector<std::string> state_columns(const ReducedState& s)
{
    std::vector<std::string> c;
    for (Eigen::Index l = 0; l < s.v.size(); ++l) c.push_back("v_" + std::to_string(l));
    c.push_back("xi");
    return c;
}

inline std::vector<double> flatten(const ReducedState& s)
{
    std::vector<double> out(s.v.data(), s.v.data() + s.v.size());
    out.push_back(s.xi);
    return out;
}

enum class Integrator { euler, rk4 };

inline Integrator parse_integrator(const std::string& s)
{
    if (s == "euler") return Integrator::euler;
    if (s == "rk4") return Integrator::rk4;
    throw domain_error("unknown integrator: " + s);
}

struct StepGuard {
    double cap = 30.0;  // exp(v^2/2) overflows near |v| = 38
    int max_halvings = 60;
    double max_change = INFINITY;  // shrink the step so no coordinate moves further than this
};

struct StepResult {
    RealVector y;
    double dt = 0.0;
    int halvings = 0;
    bool capped = false;  // no admissible step; y unchanged
};

template <class Field>
RealVector integrator_step(const Field& f, const RealVector& y, double h, Integrator integ)
{
    if (integ == Integrator::euler) return y + h * f(y);
    const RealVector k1 = f(y);
    const RealVector k2 = f(RealVector(y + 0.5 * h * k1));
    const RealVector k3 = f(RealVector(y + 0.5 * h * k2));
    const RealVector k4 = f(RealVector(y + h * k3));
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Halves the step while the candidate leaves the box |y_i| <= cap on the first
// `guarded` coordinates (or turns non-finite).
template <class Field>
StepResult guarded_step(const Field& f, const RealVector& y, double eta, Integrator integ, const StepGuard& guard,
                        Eigen::Index guarded)
{
    if (!(eta > 0)) throw domain_error("step size must be > 0");
    double h = eta;
    if (std::isfinite(guard.max_change)) {
        const double speed = f(y).cwiseAbs().maxCoeff();
        if (std::isfinite(speed) && speed * h > guard.max_change) h = guard.max_change / speed;
    }
    for (int k = 0; k <= guard.max_halvings; ++k, h *= 0.5) {
        RealVector next = integrator_step(f, y, h, integ);
        if (next.allFinite() && next.head(guarded).cwiseAbs().maxCoeff() <= guard.cap &&
            (next - y).cwiseAbs().maxCoeff() <= guard.max_change) {
            if (next == y && y.head(guarded).cwiseAbs().maxCoeff() > 0.5 * guard.cap) break;  // stalled at the cap
            return {next, h, k, false};
        }
    }
    return {y, 0.0, guard.max_halvings, true};
}

// v' = Delta o exp(v^2/2)
inline StepResult reduced_linear_step(const ReducedState& s, const RealVector& delta, double eta,
                                      Integrator integ = Integrator::rk4, const StepGuard& guard = {})
{
    if (delta.size() != s.v.size()) throw domain_error("reduced_linear_step: dimension mismatch");
    auto f = [&](const RealVector& v) { return RealVector(delta.array() * (0.5 * v.array().square()).exp()); };
    return guarded_step(f, s.v, eta, integ, guard, s.v.size());
}

// max_{l,l'} |erf(v_l/s)/Delta_l - erf(v_l'/s)/Delta_l'|. The exact first integral of
// v' = Delta o exp(v^2/2) uses s = sqrt(2).
inline double erf_invariant_residual(const ReducedState& s, const RealVector& delta, double scale = std::sqrt(2.0))
{
    if (delta.size() != s.v.size()) throw domain_error("erf_invariant_residual: dimension mismatch");
    if ((delta.array() == 0).any()) throw domain_error("erf_invariant_residual: zero Delta entry");
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index l = 0; l < delta.size(); ++l) {
        const double q = num::erf(s.v(l) / scale) / delta(l);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    return hi - lo;
}

// v' = (mu - v) o exp(v^2/2), or v' = mu - v without attention.
inline RealVector nonlinear_field(const RealVector& v, const RealVector& mu, bool with_attention)
{
    RealVector d = mu - v;
    if (with_attention) d.array() *= (0.5 * v.array().square()).exp();
    return d;
}

inline StepResult reduced_nonlinear_step(const ReducedState& s, const RealVector& mu, double eta, bool with_attention,
                                         Integrator integ = Integrator::rk4, const StepGuard& guard = {})
{
    if (mu.size() != s.v.size()) throw domain_error("reduced_nonlinear_step: dimension mismatch");
    auto f = [&](const RealVector& v) { return nonlinear_field(v, mu, with_attention); };
    return guarded_step(f, s.v, eta, integ, guard, s.v.size());
}

// Gap coordinates for the same dynamics: l_j = ln|delta_j|, delta_j = 1 - v_j/mu_j.
// l_j' = -exp(v_j^2/2) (or -1), which stays resolvable long after delta_j drops below
// machine epsilon in the v coordinates.
struct GapState {
    RealVector log_gap;
    RealVector sign;
    double t = 0.0;

    RealVector v(const RealVector& mu) const
    {
        return mu.array() * (1.0 - sign.array() * log_gap.array().exp());
    }

    static GapState from_v(const RealVector& v, const RealVector& mu)
    {
        if ((mu.array() == 0).any()) throw domain_error("GapState: mu entries must be nonzero");
        RealVector delta = (1.0 - v.array() / mu.array()).matrix();
        if ((delta.array() == 0).any()) throw domain_error("GapState: delta must be nonzero initially");
        GapState g;
        g.log_gap = delta.array().abs().log();
        g.sign = delta.array().sign();
        return g;
    }
};

inline GapState gap_step(const GapState& s, const RealVector& mu, double eta, bool with_attention,
                         Integrator integ = Integrator::rk4)
{
    auto f = [&](const RealVector& lg) -> RealVector {
        if (!with_attention) return RealVector::Constant(lg.size(), -1.0);
        const RealVector v = mu.array() * (1.0 - s.sign.array() * lg.array().exp());
        return -(0.5 * v.array().square()).exp();
    };
    GapState n = s;
    n.log_gap = integrator_step(f, s.log_gap, eta, integ);
    n.t = s.t + eta;
    return n;
}

struct RatioSeries {
    std::vector<double> t;
    std::vector<double> ratio;
    double target = 1.0;
    bool truncated = false;  // delta_k (or delta_j) stopped being resolvable
};

inline double convergence_target(const RealVector& mu, Eigen::Index j, Eigen::Index k)
{
    return std::exp(0.5 * (mu(j) * mu(j) - mu(k) * mu(k)));
}

// ratio(t) = ln(delta_j(0)/delta_j(t)) / ln(delta_k(0)/delta_k(t)) from log-gap series.
// Snapshots where either log-gap is not finite or at/below `floor_log` end the series.
inline RatioSeries convergence_ratio(const std::vector<double>& t, const std::vector<RealVector>& log_gap,
                                     const RealVector& mu, Eigen::Index j, Eigen::Index k,
                                     double floor_log = -INFINITY)
{
    if (t.size() != log_gap.size() || t.empty()) throw domain_error("convergence_ratio: series mismatch");
    if (mu(j) == 0 || mu(k) == 0) throw domain_error("convergence_ratio: mu_j and mu_k must be nonzero");
    RatioSeries out;
    out.target = convergence_target(mu, j, k);
    const double lj0 = log_gap[0](j), lk0 = log_gap[0](k);
    if (!std::isfinite(lj0) || !std::isfinite(lk0)) throw domain_error("convergence_ratio: delta(0) must be nonzero");
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double lj = log_gap[i](j), lk = log_gap[i](k);
        if (!std::isfinite(lj) || !std::isfinite(lk) || lj <= floor_log || lk <= floor_log) {
            out.truncated = true;
            break;
        }
        const double den = lk0 - lk;
        if (den == 0.0) continue;
        out.t.push_back(t[i]);
        out.ratio.push_back(j == k ? 1.0 : (lj0 - lj) / den);
    }
    return out;
}

// Same, from v-coordinate snapshots; delta below ~1e-13 is rounding noise and ends the series.
inline RatioSeries convergence_ratio(const Trajectory<ReducedState>& tr, const RealVector& mu, Eigen::Index j,
                                     Eigen::Index k, double floor_log = std::log(1e-13))
{
    std::vector<double> t;
    std::vector<RealVector> lg;
    for (const auto& s : tr.snapshots) {
        t.push_back(s.t);
        lg.emplace_back((1.0 - s.state.v.array() / mu.array()).abs().log().matrix());
    }
    return convergence_ratio(t, lg, mu, j, k, floor_log);
}

// Theory-side attention entropy for a single node: entropy(softmax(v^2)).
inline double node_attention_entropy(const RealVector& v)
{
    return num::entropy(num::softmax(v.array().square().matrix()));
}

} // namespace joma::dyn
