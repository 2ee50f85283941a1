#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attention.hpp"
#include "joma/core/errors.hpp"
#include "joma/core/types.hpp"
#include "trajectory.hpp"

namespace joma::dyn {

// Stationary class-conditional statistics for a fixed query m: component c has
// probability weight[c], frequency vector x.col(c) and back-propagated gradient g(c, k).
struct GradStats {
    std::vector<double> weight;
    RealMatrix x;  // M_C x C
    RealMatrix g;  // C x K

    Eigen::Index contexts() const { return x.rows(); }
    Eigen::Index components() const { return x.cols(); }
    Eigen::Index nodes() const { return g.cols(); }

    void validate() const
    {
        if (components() < 1) throw domain_error("GradStats: need at least one component");
        if (static_cast<Eigen::Index>(weight.size()) != components() || g.rows() != components())
            throw domain_error("GradStats: component count mismatch");
        if ((x.array() < 0).any()) throw domain_error("GradStats: negative frequency");
        require_finite(x, "GradStats.x");
        require_finite(g, "GradStats.g");
        for (double w : weight)
            if (!(w >= 0) || !std::isfinite(w)) throw domain_error("GradStats: invalid weight");
    }

    Eigen::Map<const RealVector> weights() const
    {
        return {weight.data(), static_cast<Eigen::Index>(weight.size())};
    }

    // Delta(l, k) = E[g_k x_l]
    RealMatrix delta() const { return x * weights().asDiagonal() * g; }

    // E[g_k h'_k] with h' = 1
    RealVector xi_rate() const { return g.transpose() * weights(); }
};

struct CoupledState {
    RealMatrix V;      // M_C x K, columns v_k
    RealVector xi;     // K
    RealVector z;      // M_C
    long step = 0;
    double t = 0.0;
    RealVector b_bar;  // running mean of E[b] over the steps taken

    static CoupledState zero(Eigen::Index contexts, Eigen::Index nodes)
    {
        return {RealMatrix::Zero(contexts, nodes), RealVector::Zero(nodes), RealVector::Zero(contexts), 0, 0.0,
                RealVector::Zero(contexts)};
    }
};

inline std::vector<std::string> state_columns(const CoupledState& s)
{
    std::vector<std::string> c;
    for (Eigen::Index k = 0; k < s.V.cols(); ++k)
        for (Eigen::Index l = 0; l < s.V.rows(); ++l) c.push_back("v_" + std::to_string(l) + "_" + std::to_string(k));
    for (Eigen::Index k = 0; k < s.xi.size(); ++k) c.push_back("xi_" + std::to_string(k));
    for (Eigen::Index l = 0; l < s.z.size(); ++l) c.push_back("z_" + std::to_string(l));
    for (Eigen::Index l = 0; l < s.b_bar.size(); ++l) c.push_back("bbar_" + std::to_string(l));
    return c;
}

inline std::vector<double> flatten(const CoupledState& s)
{
    std::vector<double> out(s.V.data(), s.V.data() + s.V.size());
    out.insert(out.end(), s.xi.data(), s.xi.data() + s.xi.size());
    out.insert(out.end(), s.z.data(), s.z.data() + s.z.size());
    out.insert(out.end(), s.b_bar.data(), s.b_bar.data() + s.b_bar.size());
    return out;
}

// One forward-Euler step of the joint MLP/attention dynamics with linear activation.
inline CoupledState coupled_step(const CoupledState& s, const GradStats& stats, const AttentionKind& kind, double eta)
{
    if (!(eta > 0)) throw domain_error("coupled_step: eta must be > 0");
    const Eigen::Index M = stats.contexts(), K = stats.nodes(), C = stats.components();
    if (s.V.rows() != M || s.V.cols() != K || s.z.size() != M || s.xi.size() != K)
        throw domain_error("coupled_step: state/stats dimension mismatch");

    RealMatrix Vdot = RealMatrix::Zero(M, K);
    RealVector zdot = RealVector::Zero(M);
    RealVector b_mean = RealVector::Zero(M);
    for (Eigen::Index c = 0; c < C; ++c) {
        const double p = stats.weight[static_cast<std::size_t>(c)];
        if (p == 0.0) continue;
        const RealVector xc = stats.x.col(c);
        const RealVector b = attention_reweight(s.z, xc, kind);
        const RealVector gc = stats.g.row(c).transpose();
        Vdot.noalias() += p * b * gc.transpose();
        zdot += p * attention_vjp(xc, b, s.V * gc, kind);
        b_mean += p * b;
    }

    CoupledState n = s;
    n.V += eta * Vdot;
    n.xi += eta * stats.xi_rate();
    n.z += eta * zdot;
    n.b_bar = (s.b_bar * static_cast<double>(s.step) + b_mean) / static_cast<double>(s.step + 1);
    n.step = s.step + 1;
    n.t = s.t + eta;
    if (!n.V.allFinite() || !n.z.allFinite()) throw divergence_error("coupled_step: state became non-finite");
    return n;
}

// Closed-form logits predicted from V; c is the per-token constant fixed by the initial state.
inline RealVector invariant_estimate(const CoupledState& s, const AttentionKind& kind, const RealVector& c)
{
    const RealVector v2 = s.V.array().square().rowwise().sum();
    switch (kind.tag) {
    case AttentionKind::Tag::linear: {
        RealVector out(v2.size());
        for (Eigen::Index l = 0; l < v2.size(); ++l) {
            const double mag = std::sqrt(std::max(v2(l) + c(l), 0.0));
            out(l) = s.z(l) < 0 ? -mag : mag;
        }
        return out;
    }
    case AttentionKind::Tag::exp: return 0.5 * v2 + c;
    case AttentionKind::Tag::softmax: {
        const double norms = s.V.squaredNorm();  // sum_k ||v_k||^2
        return 0.5 * (v2 - norms * s.b_bar) + c;
    }
    }
    return {};
}

inline RealVector invariant_estimate(const CoupledState& s, const AttentionKind& kind)
{
    return invariant_estimate(s, kind, RealVector::Zero(s.z.size()));
}

// The two pieces of the softmax estimate: 1/2 sum_k v_k^2 and -1/2 sum_k ||v_k||^2 b_bar.
inline std::pair<RealVector, RealVector> softmax_estimate_parts(const CoupledState& s)
{
    const RealVector v2 = s.V.array().square().rowwise().sum();
    return {0.5 * v2, -0.5 * s.V.squaredNorm() * s.b_bar};
}

// Constant c such that the invariant holds exactly at state s.
inline RealVector invariant_constant(const CoupledState& s, const AttentionKind& kind)
{
    const RealVector v2 = s.V.array().square().rowwise().sum();
    switch (kind.tag) {
    case AttentionKind::Tag::linear: return s.z.array().square().matrix() - v2;
    case AttentionKind::Tag::exp: return s.z - 0.5 * v2;
    case AttentionKind::Tag::softmax: return s.z - 0.5 * (v2 - s.V.squaredNorm() * s.b_bar);
    }
    return {};
}

// Linear attention: ||z^2 - sum v^2 - c||_inf; otherwise ||z - z_hat||_inf.
inline double invariant_residual(const CoupledState& s, const AttentionKind& kind, const RealVector& c)
{
    if (kind.tag == AttentionKind::Tag::linear) {
        const RealVector v2 = s.V.array().square().rowwise().sum();
        return (s.z.array().square().matrix() - v2 - c).cwiseAbs().maxCoeff();
    }
    return (s.z - invariant_estimate(s, kind, c)).cwiseAbs().maxCoeff();
}

template <class Tr>
std::vector<double> invariant_residual(const Tr& traj, const AttentionKind& kind)
{
    std::vector<double> out;
    if (traj.empty()) return out;
    const RealVector c = invariant_constant(traj[0].state, kind);
    for (const auto& snap : traj.snapshots) out.push_back(invariant_residual(snap.state, kind, c));
    return out;
}

inline Trajectory<CoupledState> simulate_coupled(CoupledState s, const GradStats& stats, const AttentionKind& kind,
                                                 double eta, long steps, long stride)
{
    stats.validate();
    if (steps < 0 || stride < 1) throw domain_error("simulate_coupled: steps >= 0 and stride >= 1 required");
    const RealVector c = invariant_constant(s, kind);
    Trajectory<CoupledState> tr;
    tr.metric_names = {"residual"};
    tr.push(s.t, s, {invariant_residual(s, kind, c)});
    for (long i = 1; i <= steps; ++i) {
        s = coupled_step(s, stats, kind, eta);
        if (i % stride == 0 || i == steps) tr.push(s.t, s, {invariant_residual(s, kind, c)});
    }
    return tr;
}

} // namespace joma::dyn
