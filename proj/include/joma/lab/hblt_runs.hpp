#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "joma/hblt.hpp"
#include "joma/lab/artifacts.hpp"
#include "joma/lab/config.hpp"

namespace joma::lab {

struct CooccurConfig {
    std::vector<int> layer_sizes{2, 4, 8};
    int classes = 4;
    double rho = 0.9;
    std::vector<double> class_prior;  // empty = uniform
    int samples = 100000;
    int sequence_length = 30;
    bool exact = true;
    int threads = 1;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("layer_sizes", s.layer_sizes);
        v("classes", s.classes);
        v("rho", s.rho);
        v("class_prior", s.class_prior);
        v("samples", s.samples);
        v("sequence_length", s.sequence_length);
        v("exact", s.exact);
        v("threads", s.threads);
    }

    hblt::HbltSpec spec() const
    {
        hblt::HbltSpec s;
        s.depth = static_cast<int>(layer_sizes.size());
        s.classes = classes;
        s.class_prior = class_prior.empty() ? std::vector<double>(static_cast<std::size_t>(std::max(classes, 0)),
                                                                  classes > 0 ? 1.0 / classes : 0.0)
                                            : class_prior;
        s.rho = rho;
        s.layer_sizes = layer_sizes;
        s.sequence_length = sequence_length;
        return s;
    }

    void validate() const
    {
        try {
            spec().validate();
        } catch (const std::exception& e) {
            throw config_error(e.what());
        }
        require(samples >= 1, "samples must be >= 1");
        require(threads >= 1, "threads must be >= 1");
        require(!exact || hblt::build_tree(spec()).nodes() <= hblt::enumeration_limit,
                "exact enumeration needs at most 24 latents; set exact to false");
    }

    bool operator==(const CooccurConfig&) const = default;
};

struct CooccurRow {
    int H = 0, l = 0, m = 0;
    double analytic = 0, exact = 0, empirical = 0, standard_error = 0, approx = 0, z_score = 0;
};

struct CooccurResult {
    std::vector<CooccurRow> rows;
    Artifacts art;
};

// One token pair per CLA height H = 1 .. L-1.
inline CooccurResult cooccur_run(const CooccurConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const auto spec = cfg.spec();
    const auto tree = hblt::build_tree(spec);
    const auto samples = hblt::sample(spec, static_cast<std::size_t>(cfg.samples), seed, cfg.threads);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CooccurResult out;
    auto& t = out.art.add_table("cooccur.csv",
                                {"H", "token_l", "token_m", "analytic", "exact", "empirical", "stderr", "approx", "z_score"});
    const double eps = 1 - cfg.rho;
    for (int H = 1; H < tree.depth(); ++H) {
        const auto [l, m] = hblt::leaf_pair_at_height(tree, H);
        if (l < 0) continue;
        CooccurRow r;
        r.H = H;
        r.l = l;
        r.m = m;
        r.analytic = hblt::analytic_cooccur(tree, l, m);
        r.exact = cfg.exact ? hblt::exact_cooccur(tree, l, m) : nan;
        try {
            const auto e = hblt::empirical_cooccur(samples, tree, l, m);
            r.empirical = e.estimate;
            r.standard_error = e.standard_error;
        } catch (const degenerate_error&) {
            r.empirical = r.standard_error = nan;
        }
        r.approx = hblt::approx_cooccur(H, tree.depth(), eps);
        r.z_score = r.standard_error > 0 ? (r.empirical - r.analytic) / r.standard_error : nan;
        out.rows.push_back(r);
        t.add({double(H), double(l), double(m), r.analytic, r.exact, r.empirical, r.standard_error, r.approx, r.z_score});
    }
    json rows = json::array();
    for (const auto& r : out.rows) rows.push_back({{"H", r.H}, {"analytic", r.analytic}, {"z_score", r.z_score}});
    out.art.summary = {{"rows", rows}};
    return out;
}

} // namespace joma::lab
