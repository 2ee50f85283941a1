#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"

namespace joma::hblt {

inline void check_rho(double rho)
{
    if (!(rho >= -1.0 && rho <= 1.0)) throw domain_error("rho must lie in [-1, 1]");
}

// Transition between a binary parent and child, states ordered (0, 1).
inline Eigen::Matrix2d m_matrix(double rho)
{
    check_rho(rho);
    Eigen::Matrix2d m;
    m << 1 + rho, 1 - rho, 1 - rho, 1 + rho;
    return 0.5 * m;
}

inline Eigen::Vector2d p_vec(double rho)
{
    check_rho(rho);
    return {0.5 * (1 + rho), 0.5 * (1 - rho)};
}

// Class root y0 (D values) above `depth` levels of binary latents. Level 0 holds the
// top latents, level depth-1 the leaves (one per token). Leaf l fires iff token l may appear.
struct HbltSpec {
    int depth = 3;
    int classes = 2;
    std::vector<double> class_prior;  // p0
    double rho = 0.9;
    std::vector<int> layer_sizes;  // top to leaves; back() is the vocabulary size
    int children_per_latent = 2;   // nominal fan-out; wiring is round-robin either way
    int sequence_length = 30;

    int vocab() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }

    void validate() const
    {
        if (depth < 2) throw domain_error("HbltSpec: depth must be >= 2");
        if (classes < 1) throw domain_error("HbltSpec: need at least one class");
        if (static_cast<int>(class_prior.size()) != classes) throw domain_error("HbltSpec: class prior size mismatch");
        double s = 0;
        for (double p : class_prior) {
            if (!(p >= 0) || !std::isfinite(p)) throw domain_error("HbltSpec: invalid class probability");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw domain_error("HbltSpec: class prior must sum to 1");
        check_rho(rho);
        if (static_cast<int>(layer_sizes.size()) != depth) throw domain_error("HbltSpec: need one size per level");
        for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
            if (layer_sizes[i] < 1) throw domain_error("HbltSpec: empty level");
            if (i > 0 && layer_sizes[i] < layer_sizes[i - 1])
                throw domain_error("HbltSpec: every latent needs at least one child");
        }
        if (children_per_latent < 1) throw domain_error("HbltSpec: children_per_latent must be >= 1");
        if (sequence_length < 1) throw domain_error("HbltSpec: sequence length must be >= 1");
    }

    // top * n_ch^s latents at level s, uniform class prior.
    static HbltSpec regular(int depth, int classes, double rho, int top, int n_ch, int sequence_length = 30)
    {
        HbltSpec s;
        s.depth = depth;
        s.classes = classes;
        s.class_prior.assign(static_cast<std::size_t>(classes), 1.0 / classes);
        s.rho = rho;
        s.children_per_latent = n_ch;
        int n = top;
        for (int i = 0; i < depth; ++i, n *= n_ch) s.layer_sizes.push_back(n);
        s.sequence_length = sequence_length;
        s.validate();
        return s;
    }
};

struct LatentTree {
    std::vector<int> layer_sizes;
    std::vector<int> offset;    // first global node index of each level
    std::vector<int> parent;    // global index, -1 for top latents
    std::vector<int> level;
    std::vector<int> designated;      // class -> top latent it favours
    std::vector<double> class_prior;
    double rho = 0.0;

    int depth() const { return static_cast<int>(layer_sizes.size()); }
    int nodes() const { return static_cast<int>(parent.size()); }
    int leaves() const { return layer_sizes.back(); }
    int leaf_node(int token) const { return offset.back() + token; }
    int classes() const { return static_cast<int>(designated.size()); }

    // P[top latent j = 1 | class k]
    double top_on_probability(int j, int k) const
    {
        return designated[static_cast<std::size_t>(k)] == j ? 0.5 * (1 + rho) : 0.5 * (1 - rho);
    }

    int top_ancestor(int node) const
    {
        while (parent[static_cast<std::size_t>(node)] >= 0) node = parent[static_cast<std::size_t>(node)];
        return node;
    }

    // Height of the common latent ancestor of two leaves (edges from it down to a leaf);
    // depth() when only the class root is shared.
    int cla_height(int token_l, int token_m) const
    {
        int a = leaf_node(token_l), b = leaf_node(token_m);
        int h = 0;
        while (a != b) {
            a = parent[static_cast<std::size_t>(a)];
            b = parent[static_cast<std::size_t>(b)];
            ++h;
            if (a < 0 || b < 0) return depth();
        }
        return h;
    }

    // rho_0 for top latent j: sum_k p0(k) (2 P[y_j = 0 | k] - 1)
    double rho0(int top) const
    {
        double r = 0;
        for (int k = 0; k < classes(); ++k)
            r += class_prior[static_cast<std::size_t>(k)] * (2 * (1 - top_on_probability(top, k)) - 1);
        return r;
    }

    std::vector<int> children(int node) const
    {
        std::vector<int> c;
        for (int i = 0; i < nodes(); ++i)
            if (parent[static_cast<std::size_t>(i)] == node) c.push_back(i);
        return c;
    }
};

// Round-robin wiring: node j of level s+1 hangs under node (j mod N_s) of level s.
// Class k favours top latent k mod N_top.
inline LatentTree build_tree(const HbltSpec& spec)
{
    spec.validate();
    LatentTree t;
    t.layer_sizes = spec.layer_sizes;
    t.rho = spec.rho;
    t.class_prior = spec.class_prior;
    int off = 0;
    for (int s = 0; s < spec.depth; ++s) {
        t.offset.push_back(off);
        for (int j = 0; j < spec.layer_sizes[static_cast<std::size_t>(s)]; ++j) {
            t.level.push_back(s);
            t.parent.push_back(s == 0 ? -1 : t.offset[static_cast<std::size_t>(s - 1)] + j % spec.layer_sizes[static_cast<std::size_t>(s - 1)]);
        }
        off += spec.layer_sizes[static_cast<std::size_t>(s)];
    }
    for (int k = 0; k < spec.classes; ++k) t.designated.push_back(k % spec.layer_sizes.front());
    return t;
}

} // namespace joma::hblt
