#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/hblt/sampler.hpp"
#include "joma/hblt/tree.hpp"

namespace joma::hblt {

// P[y_l = 1 | y_m = 1] for two leaves whose common latent ancestor sits H edges above them,
// in a tree with L binary levels whose top latent has marginal p(rho0).
inline double analytic_cooccur(double rho, double rho0, int L, int H)
{
    check_rho(rho);
    check_rho(rho0);
    if (L < 2) throw domain_error("analytic_cooccur: L must be >= 2");
    if (H < 1 || H > L - 1) throw domain_error("analytic_cooccur: H must lie in [1, L-1]");
    const double a = std::pow(rho, L - 1) * rho0;
    if (std::abs(1 - a) < 1e-15) throw degenerate_error("analytic_cooccur: deterministic tree, leaf marginal is zero");
    return 0.5 * (1 + std::pow(rho, 2 * H) - 2 * a) / (1 - a);
}

inline double analytic_cooccur(const HbltSpec& spec, int H, int top = 0)
{
    const LatentTree tree = build_tree(spec);
    if (top < 0 || top >= tree.layer_sizes.front()) throw domain_error("analytic_cooccur: bad top latent");
    return analytic_cooccur(spec.rho, tree.rho0(top), spec.depth, H);
}

inline double analytic_cooccur(const LatentTree& tree, int l, int m)
{
    return analytic_cooccur(tree.rho, tree.rho0(tree.top_ancestor(tree.leaf_node(l))), tree.depth(),
                            tree.cla_height(l, m));
}

// Small-noise limit with rho = rho0 = 1 - eps. The closed form differs from it by
// eps H (2H - L) / (2L) + O(eps^2).
inline double approx_cooccur(int H, int L, double /*eps*/)
{
    return 1.0 - static_cast<double>(H) / L;
}

inline constexpr int enumeration_limit = 24;

// Brute-force P[y_l = 1 | y_m = 1] summing over every class and latent configuration.
inline double exact_cooccur(const LatentTree& tree, int l, int m)
{
    if (tree.nodes() > enumeration_limit) throw size_error("exact_cooccur: more than 24 latents");
    if (l < 0 || m < 0 || l >= tree.leaves() || m >= tree.leaves()) throw domain_error("exact_cooccur: bad token");
    const int nl = tree.leaf_node(l), nm = tree.leaf_node(m);
    const double up = 0.5 * (1 + tree.rho), down = 0.5 * (1 - tree.rho);
    std::vector<std::uint8_t> y(static_cast<std::size_t>(tree.nodes()));
    // Neumaier-compensated sums over up to 2^24 configurations
    struct Sum {
        double s = 0, c = 0;
        void add(double x)
        {
            const double t = s + x;
            c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
            s = t;
        }
        double value() const { return s + c; }
    } joint_sum, marginal_sum;
    int k = 0;
    std::function<void(int, double)> visit = [&](int i, double w) {
        if (w == 0) return;
        if (i == tree.nodes()) {
            if (y[static_cast<std::size_t>(nm)]) {
                marginal_sum.add(w);
                if (y[static_cast<std::size_t>(nl)]) joint_sum.add(w);
            }
            return;
        }
        const int p = tree.parent[static_cast<std::size_t>(i)];
        const double on = p < 0 ? tree.top_on_probability(i, k) : (y[static_cast<std::size_t>(p)] ? up : down);
        y[static_cast<std::size_t>(i)] = 1;
        visit(i + 1, w * on);
        y[static_cast<std::size_t>(i)] = 0;
        visit(i + 1, w * (1 - on));
    };
    for (k = 0; k < tree.classes(); ++k) visit(0, tree.class_prior[static_cast<std::size_t>(k)]);
    const double joint = joint_sum.value(), marginal = marginal_sum.value();
    if (marginal <= 0) throw degenerate_error("exact_cooccur: P[y_m = 1] is zero");
    return joint / marginal;
}

inline double exact_cooccur(const HbltSpec& spec, int l, int m) { return exact_cooccur(build_tree(spec), l, m); }

struct CooccurStats {
    int l = 0, m = 0;
    int H = 0;
    long long joint = 0;     // n(y_l = 1, y_m = 1)
    long long marginal = 0;  // n(y_m = 1)
};

struct EmpiricalCooccur {
    double estimate = 0;
    double standard_error = 0;
    CooccurStats stats;
};

inline EmpiricalCooccur empirical_cooccur(const std::vector<SequenceSample>& samples, const LatentTree& tree, int l, int m)
{
    EmpiricalCooccur r;
    r.stats.l = l;
    r.stats.m = m;
    r.stats.H = tree.cla_height(l, m);
    for (const auto& s : samples) {
        if (s.latents.size() != static_cast<std::size_t>(tree.nodes()))
            throw domain_error("empirical_cooccur: samples carry no latent assignment");
        if (s.leaf_on(tree, m)) {
            ++r.stats.marginal;
            if (s.leaf_on(tree, l)) ++r.stats.joint;
        }
    }
    if (r.stats.marginal == 0) throw degenerate_error("empirical_cooccur: token m never active");
    const double n = static_cast<double>(r.stats.marginal);
    r.estimate = static_cast<double>(r.stats.joint) / n;
    r.standard_error = std::sqrt(r.estimate * (1 - r.estimate) / n);
    return r;
}

// First token pair (l < m) whose common ancestor sits H edges up; (-1, -1) when none exists.
inline std::pair<int, int> leaf_pair_at_height(const LatentTree& tree, int H)
{
    for (int l = 0; l < tree.leaves(); ++l)
        for (int m = l + 1; m < tree.leaves(); ++m)
            if (tree.cla_height(l, m) == H) return {l, m};
    return {-1, -1};
}

} // namespace joma::hblt
