#pragma once

#include <cstdint>
#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/rng.hpp"
#include "joma/hblt/tree.hpp"

namespace joma::hblt {

using num::Rng;

struct SequenceSample {
    int label = 0;
    std::vector<std::uint8_t> latents;  // one entry per tree node, empty when not recorded
    std::vector<int> tokens;

    bool leaf_on(const LatentTree& tree, int token) const
    {
        return latents[static_cast<std::size_t>(tree.leaf_node(token))] != 0;
    }
};

inline constexpr int max_resamples = 100;

namespace detail {

inline int draw_class(const std::vector<double>& prior, Rng& rng)
{
    double u = rng.uniform(), acc = 0;
    for (std::size_t k = 0; k < prior.size(); ++k) {
        acc += prior[k];
        if (u < acc) return static_cast<int>(k);
    }
    for (std::size_t k = prior.size(); k-- > 0;)
        if (prior[k] > 0) return static_cast<int>(k);
    return 0;
}

inline SequenceSample draw_one(const LatentTree& tree, int length, Rng& rng)
{
    const double up = 0.5 * (1 + tree.rho), down = 0.5 * (1 - tree.rho);
    SequenceSample s;
    std::vector<int> active;
    for (int attempt = 0; attempt < max_resamples; ++attempt) {
        s.label = draw_class(tree.class_prior, rng);
        s.latents.assign(static_cast<std::size_t>(tree.nodes()), 0);
        for (int i = 0; i < tree.nodes(); ++i) {
            const int p = tree.parent[static_cast<std::size_t>(i)];
            const double on = p < 0 ? tree.top_on_probability(i, s.label)
                                    : (s.latents[static_cast<std::size_t>(p)] ? up : down);
            s.latents[static_cast<std::size_t>(i)] = rng.bernoulli(on) ? 1 : 0;
        }
        active.clear();
        for (int l = 0; l < tree.leaves(); ++l)
            if (s.leaf_on(tree, l)) active.push_back(l);
        if (!active.empty()) break;
    }
    if (active.empty()) throw degenerate_error("hblt::sample: no active leaf after repeated resampling");
    s.tokens.resize(static_cast<std::size_t>(length));
    for (auto& t : s.tokens) t = active[static_cast<std::size_t>(rng.below(active.size()))];
    return s;
}

} // namespace detail

// Sample i draws from Rng(seed).split(i), so the corpus does not depend on `threads`.
inline std::vector<SequenceSample> sample(const HbltSpec& spec, std::size_t n, std::uint64_t seed, int threads = 1)
{
    const LatentTree tree = build_tree(spec);
    const Rng master(seed);
    std::vector<SequenceSample> out(n);
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = master.split(i);
            out[i] = detail::draw_one(tree, spec.sequence_length, rng);
        }
    };
    if (threads <= 1 || n < 2) {
        work(0, n);
        return out;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(w);
    for (std::size_t k = 0; k < w; ++k)
        pool.emplace_back([&, k] {
            try {
                work(n * k / w, n * (k + 1) / w);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace joma::hblt
