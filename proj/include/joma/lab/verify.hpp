#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "joma/core.hpp"
#include "joma/dynamics.hpp"
#include "joma/hblt.hpp"
#include "joma/lab/dynamics_runs.hpp"
#include "joma/lab/registry.hpp"
#include "joma/model.hpp"

namespace joma::lab {

struct Check {
    std::string name;
    double value = 0;
    double threshold = 0;
    bool at_most = true;  // pass iff value <= threshold; otherwise value >= threshold
    bool pass = false;
};

inline Check check_le(std::string name, double value, double threshold)
{
    return {std::move(name), value, threshold, true, value <= threshold};
}

inline Check check_ge(std::string name, double value, double threshold)
{
    return {std::move(name), value, threshold, false, value >= threshold};
}

inline json report(const std::string& suite, const std::vector<Check>& checks)
{
    json items = json::array();
    bool ok = true;
    for (const auto& c : checks) {
        items.push_back({{"name", c.name},
                         {"value", c.value},
                         {"threshold", c.threshold},
                         {"comparison", c.at_most ? "<=" : ">="},
                         {"pass", c.pass}});
        ok &= c.pass;
    }
    return {{"suite", suite}, {"pass", ok}, {"checks", items}};
}

// ---------------------------------------------------------------- invariants

inline std::vector<Check> invariants_suite()
{
    std::vector<Check> out;
    for (const char* kind : {"exp", "linear"}) {
        Thm1Config c;
        c.attention = kind;
        out.push_back(check_le(std::string("coupled invariant relative residual, ") + kind, thm1_run(c, 1).terminal_relative,
                               1e-2));
    }
    {
        Fig3Config c;
        out.push_back(check_le("linear reduced erf-ratio residual", fig3_run(c).max_residual, 1e-3));
    }
    {
        double worst = -INFINITY;
        for (double rho : {0.3, 0.6, 0.9})
            for (double rho0 : {0.0, 0.5, 0.9})
                for (int H = 1; H + 1 < 4; ++H)
                    worst = std::max(worst, hblt::analytic_cooccur(rho, rho0, 4, H + 1) -
                                                hblt::analytic_cooccur(rho, rho0, 4, H));
        out.push_back(check_le("co-occurrence increase with CLA height", worst, 0.0));
    }
    {
        // parse(print(c)) == c for every experiment's defaults and presets
        double bad = 0;
        for (const auto& e : experiments()) {
            std::vector<json> cfgs{e.normalize(e.defaults)};
            for (const auto& [name, patch] : e.presets) {
                json j = e.defaults;
                apply_patch(j, patch, name);
                cfgs.push_back(e.normalize(j));
            }
            for (const auto& j : cfgs) bad += e.normalize(json::parse(j.dump())) != j;
        }
        out.push_back(check_le("config round-trip mismatches", bad, 0.0));
    }
    {
        num::Rng rng(5);
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            RealVector x(8);
            for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = 20 * rng.normal();
            worst = std::max(worst, std::abs(num::softmax(x).sum() - 1));
        }
        out.push_back(check_le("softmax normalization error", worst, 1e-12));
    }
    return out;
}

// ---------------------------------------------------------------- oracles

inline std::vector<Check> oracles_suite()
{
    std::vector<Check> out;
    {
        double worst = 0;
        for (double rho : {0.3, 0.6, 0.9})
            for (int classes : {2, 3}) {
                const auto tree = hblt::build_tree(hblt::HbltSpec::regular(3, classes, rho, 2, 2));
                for (int H = 1; H <= 2; ++H) {
                    const auto [l, m] = hblt::leaf_pair_at_height(tree, H);
                    worst = std::max(worst, std::abs(hblt::analytic_cooccur(tree, l, m) - hblt::exact_cooccur(tree, l, m)));
                }
            }
        out.push_back(check_le("co-occurrence closed form vs enumeration", worst, 1e-12));
    }
    {
        const auto psi = dyn::ActivationDerivative::step();
        const auto p = num::RadialDensity::standard_gaussian(3);
        out.push_back(check_le("theta1(0) - 1/2", std::abs(dyn::theta1(0, psi, p) - 0.5), 1e-6));
        out.push_back(check_le("theta2(0) - 1/sqrt(2 pi)", std::abs(dyn::theta2(0, psi, p) - 0.3989422804014327), 1e-6));
    }
    {
        double worst = 0;
        for (int i = -999; i <= 999; ++i) {
            const double y = i / 1000.0;
            worst = std::max(worst, std::abs(std::erf(num::erf_inv(y)) - y));
        }
        out.push_back(check_le("erf(erf_inv(y)) - y", worst, 1e-14));
    }
    {
        // E[x psi(v.x + xi)] by Monte Carlo for a 3-component Gaussian mixture
        const auto psi = dyn::ActivationDerivative::step();
        const int M = 3, N = 100000;
        const auto p = num::RadialDensity::standard_gaussian(M);
        num::Rng rng(2718);
        double worst = 0;
        for (int cfg = 0; cfg < 2; ++cfg) {
            dyn::MixtureSpec mix;
            for (int c = 0; c < 3; ++c) {
                RealVector center(M);
                for (int l = 0; l < M; ++l) center(l) = rng.uniform(0, 2);
                mix.components.push_back({center, rng.uniform(-1, 1), p});
            }
            RealVector v(M);
            for (int l = 0; l < M; ++l) v(l) = rng.normal();
            const double xi = rng.uniform(-1, 1);
            const RealVector analytic = dyn::delta_nonlinear(v, xi, mix, psi);
            RealVector mean = RealVector::Zero(M), var = RealVector::Zero(M);
            for (const auto& comp : mix.components) {
                RealVector s = RealVector::Zero(M), s2 = RealVector::Zero(M);
                for (int i = 0; i < N; ++i) {
                    RealVector x(M);
                    for (int l = 0; l < M; ++l) x(l) = comp.center(l) + rng.normal();
                    const RealVector y = x * psi(v.dot(x) + xi);
                    s += y;
                    s2 += y.cwiseProduct(y);
                }
                const RealVector m = s / N;
                mean += comp.coefficient * m;
                var += comp.coefficient * comp.coefficient * (s2 / N - m.cwiseProduct(m)) / N;
            }
            for (int l = 0; l < M; ++l) worst = std::max(worst, std::abs(mean(l) - analytic(l)) / std::sqrt(var(l)));
        }
        out.push_back(check_le("nonlinear field vs Monte Carlo, |z|", worst, 3.0));
    }
    return out;
}

// ---------------------------------------------------------------- gradcheck

inline std::vector<Check> gradcheck_suite()
{
    std::vector<Check> out;
    const auto spec = hblt::HbltSpec::regular(3, 3, 0.8, 2, 2, 6);
    const auto samples = hblt::sample(spec, 6, 9);
    int variant = 0;
    for (const auto& attention : {"softmax", "exp", "linear"})
        for (const auto& mode : {model::InputMode::causal, model::InputMode::frequency})
            for (int layers : {1, 2}) {
                model::ModelConfig c;
                c.vocab = spec.vocab();
                c.classes = spec.classes;
                c.d = 10;
                c.hidden = 6;
                c.layers = layers;
                c.sequence_length = spec.sequence_length;
                c.attention = parse_attention(attention);
                c.mode = mode;
                auto p = model::init_params(c, 40 + static_cast<std::uint64_t>(variant));
                num::Rng rng(400 + static_cast<std::uint64_t>(variant++));
                for (auto* t : p.tensors())
                    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += 0.3 * rng.normal();
                if (std::string(attention) == "linear")
                    for (auto& l : p.layers) l.Z.array() += 1.0;
                const auto batch = model::make_batch(c, samples);
                for (auto obj : {model::Objective::cross_entropy, model::Objective::node_payoff}) {
                    const auto r = model::gradcheck(p, batch, obj);
                    out.push_back(check_le(std::string("gradient relative error, ") + attention + "/" + model::name(mode) +
                                               "/" + std::to_string(layers) + " layers/" + model::name(obj),
                                           r.max_rel_error, 1e-4));
                }
            }
    return out;
}

// ---------------------------------------------------------------- bounds

inline std::vector<Check> bounds_suite()
{
    std::vector<Check> out;
    ThetaConfig c;
    const auto r = theta_run(c);
    out.push_back(check_le("max g(y)", r.g_max, 1 / std::sqrt(2.0)));
    out.push_back(check_ge("min G(y)", r.G_min, 0.0));
    out.push_back(check_le("max G(y)", r.G_max, 1.0));
    out.push_back(check_le("theta1 largest decrease along r", r.theta1_max_decrease, monotone_tolerance));
    out.push_back(check_le("F largest decrease along r", r.F_max_decrease, monotone_tolerance));
    out.push_back(check_le("|F' - theta1| by finite differences", r.max_fd_error, 1e-4));
    out.push_back(check_le("|theta1(r_min)|", std::abs(r.theta1_lo), 1e-6));
    out.push_back(check_le("|theta1(r_max) - 1|", std::abs(r.theta1_hi - 1), 1e-6));
    CriticalConfig cc;
    const auto cr = critical_run(cc);
    out.push_back(check_ge("stationary points located", double(cr.count), 1.0));
    out.push_back(check_le("max |critical_residual|", cr.max_residual, 1e-4));
    return out;
}

inline const std::vector<std::string>& verify_suites()
{
    static const std::vector<std::string> s{"invariants", "oracles", "gradcheck", "bounds", "all"};
    return s;
}

inline json verify(const std::string& suite)
{
    std::vector<Check> checks;
    auto add = [&](std::vector<Check> c) { checks.insert(checks.end(), c.begin(), c.end()); };
    const bool all = suite == "all";
    if (all || suite == "invariants") add(invariants_suite());
    if (all || suite == "oracles") add(oracles_suite());
    if (all || suite == "gradcheck") add(gradcheck_suite());
    if (all || suite == "bounds") add(bounds_suite());
    if (checks.empty()) throw config_error("unknown verify suite: " + suite);
    return report(suite, checks);
}

} // namespace joma::lab
