#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "joma/core/metrics.hpp"
#include "joma/core/radial.hpp"
#include "joma/core/rng.hpp"
#include "joma/core/special.hpp"
#include "joma/dynamics.hpp"
#include "joma/lab/artifacts.hpp"
#include "joma/lab/config.hpp"

namespace joma::lab {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

inline RealVector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline dyn::AttentionKind parse_attention(const std::string& s)
{
    if (s == "linear") return dyn::AttentionKind::linear();
    if (s == "exp") return dyn::AttentionKind::exp(1.0);
    if (s == "softmax") return dyn::AttentionKind::softmax();
    throw config_error("unknown attention kind: " + s);
}

// Random class-conditional statistics: normalized positive frequency columns,
// gradients uniform in [-scale, scale], weights uniform in [0.5, 1.5] then normalized.
inline dyn::GradStats random_grad_stats(num::Rng& rng, int contexts, int nodes, int components, double scale)
{
    dyn::GradStats s;
    s.x = RealMatrix(contexts, components);
    s.g = RealMatrix(components, nodes);
    double tot = 0;
    for (int c = 0; c < components; ++c) {
        double col = 0;
        for (int l = 0; l < contexts; ++l) col += (s.x(l, c) = rng.uniform(0.05, 1.0));
        s.x.col(c) /= col;
        for (int k = 0; k < nodes; ++k) s.g(c, k) = scale * rng.uniform(-1.0, 1.0);
        s.weight.push_back(rng.uniform(0.5, 1.5));
        tot += s.weight.back();
    }
    for (auto& w : s.weight) w /= tot;
    return s;
}

// ---------------------------------------------------------------- thm1-invariants

struct Thm1Config {
    std::string attention = "exp";
    double eta = 1e-4;
    double horizon = 5.0;
    int contexts = 6;
    int nodes = 3;
    int components = 4;
    double g_scale = 1.0;
    long stride = 500;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("attention", s.attention);
        v("eta", s.eta);
        v("horizon", s.horizon);
        v("contexts", s.contexts);
        v("nodes", s.nodes);
        v("components", s.components);
        v("g_scale", s.g_scale);
        v("stride", s.stride);
    }

    void validate() const
    {
        parse_attention(attention);
        require(eta > 0 && std::isfinite(eta), "eta must be > 0");
        require(horizon > 0, "horizon must be > 0");
        require(contexts >= 1 && nodes >= 1 && components >= 1, "contexts, nodes, components must be >= 1");
        require(stride >= 1, "stride must be >= 1");
    }

    long steps() const { return std::max(1L, std::lround(horizon / eta)); }
    bool operator==(const Thm1Config&) const = default;
};

struct Thm1Result {
    double terminal_residual = 0;
    double terminal_scale = 0;  // |z|_inf, or |z^2|_inf for linear attention
    double terminal_relative = 0;
    double max_delta = 0;
    Artifacts art;
};

// Zero init for exp/softmax; linear attention starts at z = 1 because z = 0 is a fixed point there.
inline Thm1Result thm1_run(const Thm1Config& cfg, std::uint64_t seed)
{
    cfg.validate();
    const auto kind = parse_attention(cfg.attention);
    num::Rng rng(seed);
    const auto stats = random_grad_stats(rng, cfg.contexts, cfg.nodes, cfg.components, cfg.g_scale);
    auto s0 = dyn::CoupledState::zero(cfg.contexts, cfg.nodes);
    if (kind.tag == dyn::AttentionKind::Tag::linear) s0.z.setOnes();
    const RealVector c = dyn::invariant_constant(s0, kind);
    const auto tr = dyn::simulate_coupled(s0, stats, kind, cfg.eta, cfg.steps(), cfg.stride);

    const bool linear = kind.tag == dyn::AttentionKind::Tag::linear;
    auto scale_of = [&](const RealVector& z) {
        return linear ? z.array().square().maxCoeff() : z.cwiseAbs().maxCoeff();
    };

    Thm1Result out;
    out.max_delta = stats.delta().cwiseAbs().maxCoeff();
    auto& t = out.art.add_table("trajectory.csv", concat(concat({"t"}, indexed("z_", cfg.contexts)),
                                                           concat(indexed("zhat_", cfg.contexts),
                                                                  {"residual", "relative_residual"})));
    for (const auto& snap : tr.snapshots) {
        const RealVector zhat = dyn::invariant_estimate(snap.state, kind, c);
        const double res = snap.metrics[0], sc = scale_of(snap.state.z);
        std::vector<double> row{snap.t};
        for (Eigen::Index l = 0; l < zhat.size(); ++l) row.push_back(snap.state.z(l));
        for (Eigen::Index l = 0; l < zhat.size(); ++l) row.push_back(zhat(l));
        row.push_back(res);
        row.push_back(sc > 0 ? res / sc : nan);
        t.add(std::move(row));
    }
    out.terminal_residual = tr.back().metrics[0];
    out.terminal_scale = scale_of(tr.back().state.z);
    out.terminal_relative = out.terminal_residual / out.terminal_scale;
    out.art.summary = {{"terminal_residual", out.terminal_residual},
                       {"terminal_relative", out.terminal_relative},
                       {"max_delta", out.max_delta}};
    return out;
}

// ---------------------------------------------------------------- fig2-softmax-estimate

struct Fig2Config {
    std::string family = "smooth";  // smooth | random
    int contexts = 20;
    int classes = 5;
    double g_scale = 5.0;
    double width = 0.15;  // smooth family: bump width as a fraction of contexts
    double floor = 0.02;  // smooth family: added to every frequency before normalizing
    double eta = 1e-3;
    long steps = 20000;
    long stride = 200;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("family", s.family);
        v("contexts", s.contexts);
        v("classes", s.classes);
        v("g_scale", s.g_scale);
        v("width", s.width);
        v("floor", s.floor);
        v("eta", s.eta);
        v("steps", s.steps);
        v("stride", s.stride);
    }

    void validate() const
    {
        require(family == "smooth" || family == "random", "family must be smooth or random");
        require(contexts >= 2 && classes >= 2, "contexts and classes must be >= 2");
        require(width > 0 && floor >= 0, "width > 0 and floor >= 0 required");
        require(eta > 0 && steps >= 1 && stride >= 1, "eta > 0, steps >= 1, stride >= 1 required");
    }

    bool operator==(const Fig2Config&) const = default;
};

// Class c has frequency column x_c and back-propagated gradient g(c, k) = scale (1[c = k] - 1/C);
// node k is driven by class k.
inline dyn::GradStats class_conditional_stats(const Fig2Config& cfg, num::Rng& rng)
{
    const int M = cfg.contexts, C = cfg.classes;
    dyn::GradStats s;
    s.x = RealMatrix(M, C);
    s.g = RealMatrix(C, C);
    for (int c = 0; c < C; ++c) {
        const double centre = (c + 0.5) * M / C;
        for (int l = 0; l < M; ++l) {
            if (cfg.family == "smooth") {
                const double u = (l - centre) / (cfg.width * M);
                s.x(l, c) = std::exp(-0.5 * u * u) + cfg.floor;
            } else {
                s.x(l, c) = rng.uniform();
            }
        }
        s.x.col(c) /= s.x.col(c).sum();
        for (int k = 0; k < C; ++k) s.g(c, k) = cfg.g_scale * ((c == k ? 1.0 : 0.0) - 1.0 / C);
        s.weight.push_back(1.0 / C);
    }
    return s;
}

struct Fig2Result {
    double corr = 0;        // Pearson(z_hat, z) over all (snapshot, token) pairs after t = 0
    double corr_part1 = 0;  // z_hat1 = sum_k v_k^2 / 2 alone
    double corr_part2 = 0;  // z_hat2 = -sum_k |v_k|^2 b_bar / 2 alone
    double entropy_start = 0, entropy_end = 0;
    Artifacts art;
};

inline Fig2Result fig2_run(const Fig2Config& cfg, std::uint64_t seed)
{
    cfg.validate();
    num::Rng rng(seed);
    const auto stats = class_conditional_stats(cfg, rng);
    const auto kind = dyn::AttentionKind::softmax();
    const auto tr = dyn::simulate_coupled(dyn::CoupledState::zero(cfg.contexts, cfg.classes), stats, kind, cfg.eta,
                                          cfg.steps, cfg.stride);
    Fig2Result out;
    auto& t = out.art.add_table("trajectory.csv", {"t", "token", "z", "zhat", "zhat1", "zhat2"});
    std::vector<double> z, zh, z1, z2;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& st = tr[i].state;
        const RealVector est = dyn::invariant_estimate(st, kind);
        const auto [p1, p2] = dyn::softmax_estimate_parts(st);
        for (int l = 0; l < cfg.contexts; ++l) {
            t.add({tr[i].t, double(l), st.z(l), est(l), p1(l), p2(l)});
            if (i == 0) continue;
            z.push_back(st.z(l));
            zh.push_back(est(l));
            z1.push_back(p1(l));
            z2.push_back(p2(l));
        }
    }
    out.corr = num::pearson(z, zh);
    out.corr_part1 = num::pearson(z, z1);
    out.corr_part2 = num::pearson(z, z2);
    out.entropy_start = num::entropy(num::softmax(tr[0].state.z));
    out.entropy_end = num::entropy(num::softmax(tr.back().state.z));
    out.art.add_table("summary.csv", {"corr", "corr_zhat1", "corr_zhat2", "entropy_start", "entropy_end"})
        .add({out.corr, out.corr_part1, out.corr_part2, out.entropy_start, out.entropy_end});
    out.art.summary = {{"corr", out.corr}, {"corr_zhat1", out.corr_part1}, {"corr_zhat2", out.corr_part2}};
    return out;
}

// ---------------------------------------------------------------- fig3-linear-growth

struct Fig3Config {
    std::vector<double> delta{2.0, 1.0, 0.5};
    double eta = 1e-3;
    double max_change = 0.05;
    double cap = 30.0;
    long max_steps = 2000000;
    long stride = 50;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("delta", s.delta);
        v("eta", s.eta);
        v("max_change", s.max_change);
        v("cap", s.cap);
        v("max_steps", s.max_steps);
        v("stride", s.stride);
    }

    void validate() const
    {
        require(!delta.empty(), "delta must be non-empty");
        for (double d : delta) require(d != 0 && std::isfinite(d), "delta entries must be finite and nonzero");
        require(eta > 0 && max_change > 0 && cap > 0, "eta, max_change, cap must be > 0");
        require(max_steps >= 1 && stride >= 1, "max_steps and stride must be >= 1");
    }

    bool operator==(const Fig3Config&) const = default;
};

struct Fig3Result {
    double max_residual = 0;          // exact first integral, scale sqrt(2)
    double max_literal_residual = 0;  // erf(v/2) form
    Eigen::Index winner = 0;
    RealVector final_v;
    RealVector plateau;          // sqrt(2) erf_inv(Delta_l / Delta_winner), NaN for the winner
    RealVector literal_plateau;  // 2 erf_inv(Delta_l / Delta_winner)
    bool capped = false;
    Artifacts art;
};

inline Fig3Result fig3_run(const Fig3Config& cfg)
{
    cfg.validate();
    const RealVector delta = to_vector(cfg.delta);
    const auto n = delta.size();
    dyn::StepGuard guard;
    guard.cap = cfg.cap;
    guard.max_change = cfg.max_change;
    dyn::ReducedState s{RealVector::Zero(n), 0, 0};

    Fig3Result out;
    auto& t = out.art.add_table("trajectory.csv",
                                concat(concat({"t"}, indexed("v_", n)), {"residual", "literal_residual"}));
    auto record = [&](const dyn::ReducedState& st) {
        std::vector<double> row{st.t};
        for (Eigen::Index l = 0; l < n; ++l) row.push_back(st.v(l));
        row.push_back(dyn::erf_invariant_residual(st, delta));
        row.push_back(dyn::erf_invariant_residual(st, delta, 2.0));
        t.add(std::move(row));
    };
    record(s);
    long i = 0;
    for (; i < cfg.max_steps; ++i) {
        const auto r = dyn::reduced_linear_step(s, delta, cfg.eta, dyn::Integrator::rk4, guard);
        if (r.capped) {
            out.capped = true;
            break;
        }
        s = {r.y, 0, s.t + r.dt};
        out.max_residual = std::max(out.max_residual, dyn::erf_invariant_residual(s, delta));
        out.max_literal_residual = std::max(out.max_literal_residual, dyn::erf_invariant_residual(s, delta, 2.0));
        if ((i + 1) % cfg.stride == 0) record(s);
    }
    if (t.rows.back()[0] != s.t) record(s);

    delta.cwiseAbs().maxCoeff(&out.winner);
    out.final_v = s.v;
    out.plateau = RealVector::Constant(n, nan);
    out.literal_plateau = RealVector::Constant(n, nan);
    auto& p = out.art.add_table("plateau.csv", {"component", "delta", "final_v", "plateau", "literal_plateau"});
    for (Eigen::Index l = 0; l < n; ++l) {
        if (l != out.winner) {
            const double q = delta(l) / delta(out.winner);
            out.plateau(l) = std::sqrt(2.0) * num::erf_inv(q);
            out.literal_plateau(l) = 2.0 * num::erf_inv(q);
        }
        p.add({double(l), delta(l), s.v(l), out.plateau(l), out.literal_plateau(l)});
    }
    out.art.summary = {{"max_residual", out.max_residual},
                       {"max_literal_residual", out.max_literal_residual},
                       {"capped", out.capped},
                       {"winner_final", s.v(out.winner)}};
    return out;
}

// ---------------------------------------------------------------- fig4-nonlinear-entropy

struct EntropyDip {
    double start = 0, min = 0, end = 0, t_min = 0;
    bool interior = false;
    double rebound = 0;  // (end - min) / (start - min)
};

inline EntropyDip entropy_dip(const std::vector<double>& t, const std::vector<double>& h)
{
    if (h.size() < 3 || t.size() != h.size()) throw domain_error("entropy_dip: need >= 3 matching samples");
    const auto it = std::min_element(h.begin(), h.end());
    const auto i = static_cast<std::size_t>(it - h.begin());
    EntropyDip d;
    d.start = h.front();
    d.min = *it;
    d.end = h.back();
    d.t_min = t[i];
    d.interior = i > 0 && i + 1 < h.size() && d.min < d.start && d.min < d.end;
    d.rebound = d.start > d.min ? (d.end - d.min) / (d.start - d.min) : 0.0;
    return d;
}

struct Fig4Config {
    std::vector<double> mu{2.0, 1.0};
    std::vector<double> v0{0.02, 0.02};
    bool with_attention = true;
    double eta = 1e-3;
    double horizon = 20.0;
    long stride = 10;
    // random family: `family_count` draws of mu in [lo, hi]^dim, sorted, gaps >= family_gap
    int family_count = 0;
    int family_dim = 4;
    double family_lo = 1.0;
    double family_hi = 2.5;
    double family_gap = 0.25;
    double family_v0 = 0.01;
    double family_eta = 2e-3;
    double family_horizon = 40.0;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("mu", s.mu);
        v("v0", s.v0);
        v("with_attention", s.with_attention);
        v("eta", s.eta);
        v("horizon", s.horizon);
        v("stride", s.stride);
        v("family_count", s.family_count);
        v("family_dim", s.family_dim);
        v("family_lo", s.family_lo);
        v("family_hi", s.family_hi);
        v("family_gap", s.family_gap);
        v("family_v0", s.family_v0);
        v("family_eta", s.family_eta);
        v("family_horizon", s.family_horizon);
    }

    void validate() const
    {
        require(!mu.empty() && mu.size() == v0.size(), "mu and v0 must be non-empty and equal length");
        require(eta > 0 && horizon > 0 && stride >= 1, "eta > 0, horizon > 0, stride >= 1 required");
        require(family_count >= 0, "family_count must be >= 0");
        if (family_count > 0) {
            require(family_dim >= 2, "family_dim must be >= 2");
            require(family_hi > family_lo && family_gap >= 0, "family range invalid");
            require((family_dim - 1) * family_gap < family_hi - family_lo, "family gap too wide for the range");
            require(family_eta > 0 && family_horizon > 0, "family_eta and family_horizon must be > 0");
        }
    }

    bool operator==(const Fig4Config&) const = default;
};

struct NonlinearRun {
    std::vector<double> t, entropy;
    std::vector<RealVector> v;
};

inline NonlinearRun nonlinear_run(const RealVector& mu, const RealVector& v0, bool attention, double eta,
                                  double horizon, long stride)
{
    NonlinearRun r;
    dyn::ReducedState s{v0, 0, 0};
    const long steps = std::max(1L, std::lround(horizon / eta));
    auto record = [&] {
        r.t.push_back(s.t);
        r.v.push_back(s.v);
        r.entropy.push_back(dyn::node_attention_entropy(s.v));
    };
    record();
    for (long i = 1; i <= steps; ++i) {
        const auto step = dyn::reduced_nonlinear_step(s, mu, eta, attention);
        if (step.capped) throw divergence_error("nonlinear run hit the overflow cap");
        s = {step.y, 0, s.t + step.dt};
        if (i % stride == 0 || i == steps) record();
    }
    return r;
}

inline RealVector draw_family_mu(num::Rng& rng, const Fig4Config& cfg)
{
    std::vector<double> m(static_cast<std::size_t>(cfg.family_dim));
    for (;;) {
        for (auto& x : m) x = rng.uniform(cfg.family_lo, cfg.family_hi);
        std::sort(m.begin(), m.end(), std::greater<>());
        bool ok = true;
        for (std::size_t i = 1; i < m.size(); ++i) ok &= m[i - 1] - m[i] >= cfg.family_gap;
        if (ok) return to_vector(m);
    }
}

struct Fig4Result {
    EntropyDip dip;
    std::vector<EntropyDip> family;
    Artifacts art;
};

inline Fig4Result fig4_run(const Fig4Config& cfg, std::uint64_t seed)
{
    cfg.validate();
    const RealVector mu = to_vector(cfg.mu);
    const auto n = mu.size();
    const auto run = nonlinear_run(mu, to_vector(cfg.v0), cfg.with_attention, cfg.eta, cfg.horizon, cfg.stride);
    Fig4Result out;
    out.dip = entropy_dip(run.t, run.entropy);
    auto& t = out.art.add_table("trajectory.csv", concat(concat({"t"}, indexed("v_", n)), {"entropy"}));
    for (std::size_t i = 0; i < run.t.size(); ++i) {
        std::vector<double> row{run.t[i]};
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(run.v[i](j));
        row.push_back(run.entropy[i]);
        t.add(std::move(row));
    }
    out.art.summary = {{"entropy_start", out.dip.start}, {"entropy_min", out.dip.min},
                       {"entropy_end", out.dip.end},     {"interior_min", out.dip.interior},
                       {"rebound", out.dip.rebound}};
    if (cfg.family_count > 0) {
        auto& f = out.art.add_table(
            "family.csv", concat(concat({"draw"}, indexed("mu_", cfg.family_dim)),
                                 {"entropy_start", "entropy_min", "t_min", "entropy_end", "interior", "rebound"}));
        num::Rng rng(seed);
        for (int d = 0; d < cfg.family_count; ++d) {
            const RealVector m = draw_family_mu(rng, cfg);
            const auto r = nonlinear_run(m, RealVector::Constant(m.size(), cfg.family_v0), true, cfg.family_eta,
                                         cfg.family_horizon, cfg.stride);
            const auto dip = entropy_dip(r.t, r.entropy);
            out.family.push_back(dip);
            std::vector<double> row{double(d)};
            for (Eigen::Index j = 0; j < m.size(); ++j) row.push_back(m(j));
            for (double x : {dip.start, dip.min, dip.t_min, dip.end, dip.interior ? 1.0 : 0.0, dip.rebound})
                row.push_back(x);
            f.add(std::move(row));
        }
    }
    return out;
}

// ---------------------------------------------------------------- thm4-ratio

struct Thm4Config {
    std::vector<double> mu{2.0, 1.0};
    double v0 = 0.02;
    double eta = 1e-4;
    double horizon = 30.0;
    long stride = 100;
    int j = 0;
    int k = 1;
    double threshold = 1e-3;  // ratio judged once delta_k <= threshold * delta_k(0)

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("mu", s.mu);
        v("v0", s.v0);
        v("eta", s.eta);
        v("horizon", s.horizon);
        v("stride", s.stride);
        v("j", s.j);
        v("k", s.k);
        v("threshold", s.threshold);
    }

    void validate() const
    {
        const int n = static_cast<int>(mu.size());
        require(n >= 1, "mu must be non-empty");
        require(j >= 0 && j < n && k >= 0 && k < n, "j and k must index mu");
        for (double m : mu) require(m != 0 && std::isfinite(m), "mu entries must be finite and nonzero");
        for (double m : mu) require(m != v0, "v0 must differ from every mu entry");
        require(eta > 0 && horizon > 0 && stride >= 1, "eta > 0, horizon > 0, stride >= 1 required");
        require(threshold > 0 && threshold < 1, "threshold must be in (0, 1)");
    }

    bool operator==(const Thm4Config&) const = default;
};

struct Thm4Result {
    double target = 0;
    bool reached = false;
    double t_reached = nan;
    double max_rel_error_after = nan;  // over snapshots with delta_k <= threshold * delta_k(0)
    double max_rel_error_all = nan;    // over every snapshot
    double final_ratio = nan;
    Artifacts art;
};

// Integrated in log-gap coordinates so delta stays resolvable far below machine epsilon.
inline Thm4Result thm4_run(const Thm4Config& cfg)
{
    cfg.validate();
    const RealVector mu = to_vector(cfg.mu);
    auto g = dyn::GapState::from_v(RealVector::Constant(mu.size(), cfg.v0), mu);
    std::vector<double> t{0.0};
    std::vector<RealVector> lg{g.log_gap};
    const long steps = std::max(1L, std::lround(cfg.horizon / cfg.eta));
    for (long i = 1; i <= steps; ++i) {
        g = dyn::gap_step(g, mu, cfg.eta, true);
        if (i % cfg.stride == 0 || i == steps) {
            t.push_back(i * cfg.eta);
            lg.push_back(g.log_gap);
        }
    }
    const auto rs = dyn::convergence_ratio(t, lg, mu, cfg.j, cfg.k);
    Thm4Result out;
    out.target = rs.target;
    auto& tab = out.art.add_table("ratio.csv", {"t", "log_gap_j", "log_gap_k", "ratio", "target"});
    const double lk0 = lg[0](cfg.k), cut = std::log(cfg.threshold);
    double after = 0, all = 0;
    for (std::size_t i = 0, r = 0; i < t.size() && r < rs.t.size(); ++i) {
        if (t[i] != rs.t[r]) continue;
        const double ratio = rs.ratio[r++];
        const double err = std::abs(ratio / rs.target - 1.0);
        all = std::max(all, err);
        if (!out.reached && lg[i](cfg.k) - lk0 <= cut) {
            out.reached = true;
            out.t_reached = t[i];
        }
        if (out.reached) after = std::max(after, err);
        tab.add({t[i], lg[i](cfg.j), lg[i](cfg.k), ratio, rs.target});
    }
    out.max_rel_error_all = rs.ratio.empty() ? nan : all;
    if (out.reached) out.max_rel_error_after = after;
    if (!rs.ratio.empty()) out.final_ratio = rs.ratio.back();
    out.art.summary = {{"target", out.target},
                       {"reached", out.reached},
                       {"t_reached", out.t_reached},
                       {"max_rel_error_after", out.max_rel_error_after},
                       {"max_rel_error_all", out.max_rel_error_all},
                       {"final_ratio", out.final_ratio}};
    return out;
}

// ---------------------------------------------------------------- densities and psi by name

// 2-D spike at the origin plus a ring at radius 3: not log-concave, so two-component
// mixtures have stationary points.
inline num::RadialDensity spike_and_ring(int dims)
{
    return num::RadialDensity::custom_from(
        dims,
        [](double r) { return std::exp(-0.5 * r * r / 0.09) + 0.08 * std::exp(-0.5 * (r - 3) * (r - 3) / 0.09); },
        5.0, 401);
}

inline num::RadialDensity make_density(const std::string& name, int dims)
{
    if (dims < 1) throw config_error("density dimension must be >= 1");
    if (name == "gaussian") return num::RadialDensity::standard_gaussian(dims);
    if (name == "ball") return num::RadialDensity::uniform_ball(dims, 1.0);
    if (name == "spike-ring") return spike_and_ring(dims);
    throw config_error("unknown density: " + name);
}

inline dyn::ActivationDerivative make_psi(const std::string& name)
{
    if (name == "step") return dyn::ActivationDerivative::step();
    if (name == "leaky-step") return dyn::ActivationDerivative::leaky_step(0.1, 1.0);
    if (name == "sigmoid") return dyn::ActivationDerivative::sigmoid_like();
    throw config_error("unknown activation derivative: " + name);
}

// ---------------------------------------------------------------- theta-tables

struct ThetaConfig {
    std::string psi = "step";
    std::string density = "gaussian";
    int dims = 3;
    double r_min = -10.0;
    double r_max = 10.0;
    int r_points = 401;
    double fd_step = 1e-4;
    double y_max = 20.0;
    int y_points = 2001;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("psi", s.psi);
        v("density", s.density);
        v("dims", s.dims);
        v("r_min", s.r_min);
        v("r_max", s.r_max);
        v("r_points", s.r_points);
        v("fd_step", s.fd_step);
        v("y_max", s.y_max);
        v("y_points", s.y_points);
    }

    void validate() const
    {
        make_psi(psi);
        require(density == "gaussian" || density == "ball" || density == "spike-ring", "unknown density: " + density);
        require(dims >= 1, "dims must be >= 1");
        require(r_max > r_min && r_points >= 2, "r grid invalid");
        require(fd_step > 0, "fd_step must be > 0");
        require(y_max > 0 && y_points >= 2, "y grid invalid");
    }

    bool operator==(const ThetaConfig&) const = default;
};

inline constexpr double monotone_tolerance = 1e-12;

struct ThetaResult {
    double theta1_0 = 0, theta2_0 = 0;
    double theta1_lo = 0, theta1_hi = 0;  // at r_min and r_max
    double theta1_max_decrease = 0;  // largest step-to-step drop along the r grid
    double F_max_decrease = 0;
    bool theta1_monotone = true;     // drops stay at round-off level
    bool F_monotone = true;
    double max_fd_error = 0;  // max |F'(r) - theta1(r)|, central differences; NaN without F
    double g_max = -INFINITY, G_min = INFINITY, G_max = -INFINITY;
    Artifacts art;
};

inline ThetaResult theta_run(const ThetaConfig& cfg)
{
    cfg.validate();
    const auto psi = make_psi(cfg.psi);
    const auto p = make_density(cfg.density, cfg.dims);
    const bool hom = psi.homogeneous();
    ThetaResult out;
    out.theta1_0 = dyn::theta1(0.0, psi, p);
    out.theta2_0 = dyn::theta2(0.0, psi, p);
    auto& t = out.art.add_table("theta.csv", {"r", "theta1", "theta2", "F", "dF_fd"});
    double prev1 = -INFINITY, prevF = -INFINITY;
    if (!hom) out.max_fd_error = nan;
    for (int i = 0; i < cfg.r_points; ++i) {
        const double r = cfg.r_min + (cfg.r_max - cfg.r_min) * i / (cfg.r_points - 1);
        const double t1 = dyn::theta1(r, psi, p), t2 = dyn::theta2(r, psi, p);
        double F = nan, dF = nan;
        if (hom) {
            F = dyn::F_of_r(r, psi, p);
            dF = (dyn::F_of_r(r + cfg.fd_step, psi, p) - dyn::F_of_r(r - cfg.fd_step, psi, p)) / (2 * cfg.fd_step);
            out.max_fd_error = std::max(out.max_fd_error, std::abs(dF - t1));
            out.F_max_decrease = std::max(out.F_max_decrease, prevF - F);
            prevF = F;
        }
        out.theta1_max_decrease = std::max(out.theta1_max_decrease, prev1 - t1);
        prev1 = t1;
        if (i == 0) out.theta1_lo = t1;
        if (i + 1 == cfg.r_points) out.theta1_hi = t1;
        t.add({r, t1, t2, F, dF});
    }
    out.theta1_monotone = out.theta1_max_decrease <= monotone_tolerance;
    out.F_monotone = out.F_max_decrease <= monotone_tolerance;
    auto& b = out.art.add_table("bounds.csv", {"y", "g", "G"});
    for (int i = 0; i < cfg.y_points; ++i) {
        const double y = cfg.y_max * i / (cfg.y_points - 1);
        const double g = num::g_func(y), G = num::G_func(y);
        out.g_max = std::max(out.g_max, g);
        out.G_min = std::min(out.G_min, G);
        out.G_max = std::max(out.G_max, G);
        b.add({y, g, G});
    }
    out.art.summary = {{"theta1_0", out.theta1_0},     {"theta2_0", out.theta2_0},
                       {"theta1_lo", out.theta1_lo},   {"theta1_hi", out.theta1_hi},
                       {"theta1_monotone", out.theta1_monotone}, {"F_monotone", out.F_monotone},
                       {"max_fd_error", out.max_fd_error},       {"g_max", out.g_max},
                       {"G_min", out.G_min},           {"G_max", out.G_max}};
    return out;
}

// ---------------------------------------------------------------- critical-points

struct CriticalConfig {
    std::string psi = "step";
    std::string density = "spike-ring";
    std::vector<double> x_plus{1.0, 0.3};
    std::vector<double> x_minus{0.2, 0.5};
    double a_plus = 1.0;
    double r_lo = -4.5;
    double r_hi = 4.5;
    int grid = 90;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("psi", s.psi);
        v("density", s.density);
        v("x_plus", s.x_plus);
        v("x_minus", s.x_minus);
        v("a_plus", s.a_plus);
        v("r_lo", s.r_lo);
        v("r_hi", s.r_hi);
        v("grid", s.grid);
    }

    void validate() const
    {
        const auto psi_d = make_psi(psi);
        require(psi_d.homogeneous(), "critical points need a homogeneous activation (step or leaky-step)");
        require(density == "gaussian" || density == "ball" || density == "spike-ring", "unknown density: " + density);
        require(!x_plus.empty() && x_plus.size() == x_minus.size(), "centers must have equal nonzero length");
        for (double x : x_plus) require(x >= 0, "centers must be non-negative");
        for (double x : x_minus) require(x >= 0, "centers must be non-negative");
        require(a_plus != 0, "a_plus must be nonzero");
        require(r_hi > r_lo && grid >= 2, "r range invalid");
    }

    bool operator==(const CriticalConfig&) const = default;
};

struct CriticalResult {
    std::size_t count = 0;
    double max_residual = 0;    // |critical_residual| over located points
    double max_field_norm = 0;  // |(v', xi')|_inf at located points
    Artifacts art;
};

inline CriticalResult critical_run(const CriticalConfig& cfg)
{
    cfg.validate();
    const auto psi = make_psi(cfg.psi);
    const RealVector xp = to_vector(cfg.x_plus), xm = to_vector(cfg.x_minus);
    const auto density = make_density(cfg.density, static_cast<int>(xp.size()));
    const num::QuadratureSpec spec{1e-11, 1e-11, 4000, 12};
    const auto pts = dyn::two_component_stationary_points(xp, xm, density, psi, cfg.a_plus, cfg.r_lo, cfg.r_hi,
                                                          cfg.grid, spec);
    CriticalResult out;
    out.count = pts.size();
    auto& t = out.art.add_table(
        "points.csv", concat(indexed("v_", xp.size()), {"xi", "a_plus", "a_minus", "field_norm", "critical_residual"}));
    for (const auto& sp : pts) {
        dyn::MixtureSpec mix{{{xp, sp.a_plus, density}, {xm, sp.a_minus, density}}, 0};
        const double res = dyn::critical_residual(sp.v, sp.xi, mix, psi, spec);
        out.max_residual = std::max(out.max_residual, std::abs(res));
        out.max_field_norm = std::max(out.max_field_norm, sp.field_norm);
        std::vector<double> row(sp.v.data(), sp.v.data() + sp.v.size());
        for (double x : {sp.xi, sp.a_plus, sp.a_minus, sp.field_norm, res}) row.push_back(x);
        t.add(std::move(row));
    }
    out.art.summary = {{"count", out.count}, {"max_residual", out.max_residual}, {"max_field_norm", out.max_field_norm}};
    return out;
}

} // namespace joma::lab
