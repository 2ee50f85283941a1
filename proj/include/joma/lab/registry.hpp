#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "joma/lab/artifacts.hpp"
#include "joma/lab/config.hpp"
#include "joma/lab/dynamics_runs.hpp"
#include "joma/lab/hblt_runs.hpp"
#include "joma/lab/io.hpp"
#include "joma/lab/train_runs.hpp"

namespace joma::lab {

using Schema = std::vector<std::pair<std::string, std::vector<std::string>>>;  // file -> header

struct Experiment {
    std::string name;
    std::string summary;
    json defaults;
    std::vector<std::pair<std::string, json>> presets;  // name -> patch over defaults
    std::function<json(const json&)> normalize;         // strict parse + validate, back to JSON
    std::function<Schema(const json&)> schema;
    std::function<Artifacts(const json&, std::uint64_t seed)> run;

    const json& preset(const std::string& p) const
    {
        for (const auto& [n, patch] : presets)
            if (n == p) return patch;
        throw config_error("experiment " + name + " has no preset " + p);
    }
};

namespace detail {

template <class C>
Experiment make_experiment(std::string name, std::string summary, std::vector<std::pair<std::string, json>> presets,
                           std::function<Schema(const C&)> schema, std::function<Artifacts(const C&, std::uint64_t)> run)
{
    Experiment e;
    e.name = std::move(name);
    e.summary = std::move(summary);
    e.defaults = to_json(C{});
    e.presets = std::move(presets);
    e.normalize = [](const json& j) { return to_json(from_json<C>(j)); };
    e.schema = [schema](const json& j) { return schema(from_json<C>(j)); };
    e.run = [run](const json& j, std::uint64_t seed) { return run(from_json<C>(j), seed); };
    return e;
}

inline std::vector<std::pair<std::string, json>> table1_grid()
{
    std::vector<std::pair<std::string, json>> out;
    for (int c : {20, 30, 50})
        for (int nch : {2, 3})
            for (auto [n0, n1] : {std::pair{10, 20}, std::pair{20, 30}}) {
                const std::string name = "c" + std::to_string(c) + "-nch" + std::to_string(nch) + "-n" +
                                         std::to_string(n0) + "-" + std::to_string(n1);
                out.push_back({name, {{"classes", c}, {"n_ch", nch}, {"layer_sizes", {n0, n1, 100}}}});
            }
    return out;
}

inline const json quick_train = {{"train_samples", 2000}, {"val_samples", 500}, {"hidden", 64},
                                 {"steps", 200},          {"stride", 50},       {"eval_samples", 200}};

inline json merged(json a, const json& b)
{
    for (const auto& it : b.items()) a[it.key()] = it.value();
    return a;
}

} // namespace detail

inline const std::vector<Experiment>& experiments()
{
    using detail::make_experiment;
    static const std::vector<Experiment> all = [] {
        std::vector<Experiment> v;
        v.push_back(make_experiment<Thm1Config>(
            "thm1-invariants", "coupled z/v flow from zero init; residual of the closed-form invariant",
            {{"exp", {{"attention", "exp"}}}, {"linear", {{"attention", "linear"}}}},
            [](const Thm1Config& c) -> Schema {
                return {{"trajectory.csv", concat(concat({"t"}, indexed("z_", c.contexts)),
                                                  concat(indexed("zhat_", c.contexts), {"residual", "relative_residual"}))}};
            },
            [](const Thm1Config& c, std::uint64_t s) { return thm1_run(c, s).art; }));
        v.push_back(make_experiment<Fig2Config>(
            "fig2-softmax-estimate", "softmax attention logits against the invariant estimate",
            {{"smooth", {{"family", "smooth"}}}, {"random", {{"family", "random"}}}},
            [](const Fig2Config&) -> Schema {
                return {{"trajectory.csv", {"t", "token", "z", "zhat", "zhat1", "zhat2"}},
                        {"summary.csv", {"corr", "corr_zhat1", "corr_zhat2", "entropy_start", "entropy_end"}}};
            },
            [](const Fig2Config& c, std::uint64_t s) { return fig2_run(c, s).art; }));
        v.push_back(make_experiment<Fig3Config>(
            "fig3-linear-growth", "reduced linear dynamics: winner grows, the rest plateau",
            {{"default", json::object()}},
            [](const Fig3Config& c) -> Schema {
                const long n = static_cast<long>(c.delta.size());
                return {{"trajectory.csv", concat(concat({"t"}, indexed("v_", n)), {"residual", "literal_residual"})},
                        {"plateau.csv", {"component", "delta", "final_v", "plateau", "literal_plateau"}}};
            },
            [](const Fig3Config& c, std::uint64_t) { return fig3_run(c).art; }));
        v.push_back(make_experiment<Fig4Config>(
            "fig4-nonlinear-entropy", "reduced nonlinear dynamics: attention entropy dips then rebounds",
            {{"single", json::object()}, {"family", {{"family_count", 10}}}},
            [](const Fig4Config& c) -> Schema {
                Schema s{{"trajectory.csv", concat(concat({"t"}, indexed("v_", static_cast<long>(c.mu.size()))), {"entropy"})}};
                if (c.family_count > 0)
                    s.push_back({"family.csv", concat(concat({"draw"}, indexed("mu_", c.family_dim)),
                                                      {"entropy_start", "entropy_min", "t_min", "entropy_end", "interior",
                                                       "rebound"})});
                return s;
            },
            [](const Fig4Config& c, std::uint64_t s) { return fig4_run(c, s).art; }));
        v.push_back(make_experiment<Thm4Config>(
            "thm4-ratio", "log-gap convergence ratio of two components",
            {{"salient", {{"mu", {2.0, 1.0}}}}, {"equal", {{"mu", {1.0, 1.0}}}}},
            [](const Thm4Config&) -> Schema { return {{"ratio.csv", {"t", "log_gap_j", "log_gap_k", "ratio", "target"}}}; },
            [](const Thm4Config& c, std::uint64_t) { return thm4_run(c).art; }));
        v.push_back(make_experiment<ThetaConfig>(
            "theta-tables", "theta1, theta2 and F over r; g and G bounds",
            {{"step-gaussian", json::object()},
             {"leaky-step", {{"psi", "leaky-step"}}},
             {"sigmoid", {{"psi", "sigmoid"}}},
             {"ball", {{"density", "ball"}}}},
            [](const ThetaConfig&) -> Schema {
                return {{"theta.csv", {"r", "theta1", "theta2", "F", "dF_fd"}}, {"bounds.csv", {"y", "g", "G"}}};
            },
            [](const ThetaConfig& c, std::uint64_t) { return theta_run(c).art; }));
        v.push_back(make_experiment<CriticalConfig>(
            "critical-points", "stationary points of the nonlinear field for a two-component mixture",
            {{"spike-ring", json::object()}},
            [](const CriticalConfig& c) -> Schema {
                return {{"points.csv", concat(indexed("v_", static_cast<long>(c.x_plus.size())),
                                              {"xi", "a_plus", "a_minus", "field_norm", "critical_residual"})}};
            },
            [](const CriticalConfig& c, std::uint64_t) { return critical_run(c).art; }));
        v.push_back(make_experiment<CooccurConfig>(
            "hblt-cooccur", "token co-occurrence: closed form, enumeration and Monte Carlo",
            {{"L3", json::object()},
             {"L4", {{"layer_sizes", {2, 4, 8, 16}}, {"exact", false}}},
             {"rho0", {{"rho", 0.0}}}},
            [](const CooccurConfig&) -> Schema {
                return {{"cooccur.csv",
                         {"H", "token_l", "token_m", "analytic", "exact", "empirical", "stderr", "approx", "z_score"}}};
            },
            [](const CooccurConfig& c, std::uint64_t s) { return cooccur_run(c, s).art; }));
        {
            auto presets = detail::table1_grid();
            presets.push_back({"quick", detail::merged(detail::quick_train, {{"seeds", 2}})});
            v.push_back(make_experiment<Table1Config>(
                "table1-ncorr", "NCorr between latents and best-matched hidden neurons, per layer and seed",
                std::move(presets),
                [](const Table1Config& c) -> Schema {
                    return {{"ncorr.csv", {"seed", "layer", "mean", "std", "null_mean"}},
                            {"ncorr_latents.csv", {"seed", "layer", "latent_id", "best_neuron", "ncorr"}},
                            {"metrics.csv", concat({"seed"}, metrics_columns(c.train.layers))}};
                },
                [](const Table1Config& c, std::uint64_t s) { return table1_run(c, s).art; }));
        }
        v.push_back(make_experiment<LrSweepConfig>(
            "entropy-lr-sweep", "terminal attention entropy across learning rates, 1-layer model",
            {{"fig7-adam", json::object()},
             {"quick", detail::merged(detail::quick_train, {{"lrs", {1e-3, 1e-2}}})}},
            [](const LrSweepConfig& c) -> Schema {
                return {{"metrics.csv", concat({"lr"}, metrics_columns(c.train.layers))},
                        {"summary.csv", {"lr", "terminal_entropy", "min_entropy", "final_val_loss"}}};
            },
            [](const LrSweepConfig& c, std::uint64_t s) { return lr_sweep_run(c, s).art; }));
        v.push_back(make_experiment<RankSeriesConfig>(
            "rank-series", "attention entropy and stable rank of W over training",
            {{"fig5-1layer", {{"optimizer", "sgd"}, {"lr", 2.0}}},
             {"rank-1layer", {{"optimizer", "adam"}, {"lr", 1e-3}}},
             {"quick", detail::quick_train}},
            [](const RankSeriesConfig& c) -> Schema { return {{"metrics.csv", metrics_columns(c.train.layers)}}; },
            [](const RankSeriesConfig& c, std::uint64_t s) { return rank_series_run(c, s).art; }));
        return v;
    }();
    return all;
}

inline const Experiment& find_experiment(const std::string& name)
{
    for (const auto& e : experiments())
        if (e.name == name) return e;
    throw config_error("unknown experiment: " + name);
}

// defaults, then preset, then config file, then overrides; validated at the end.
inline json resolve_config(const Experiment& e, const std::string& preset, const std::string& config_text,
                           const std::vector<std::pair<std::string, std::string>>& overrides)
{
    json cfg = e.defaults;
    if (!preset.empty()) apply_patch(cfg, e.preset(preset), "preset " + preset);
    if (!config_text.empty()) {
        json file;
        try {
            file = json::parse(config_text);
        } catch (const json::parse_error& err) {
            throw config_error(std::string("config does not parse: ") + err.what());
        }
        apply_patch(cfg, file, "config file");
    }
    apply_overrides(cfg, overrides);
    return e.normalize(cfg);
}

inline void check_schema(const Schema& schema, const Artifacts& art)
{
    if (schema.size() != art.tables.size())
        throw domain_error("schema lists " + std::to_string(schema.size()) + " tables, run produced " +
                           std::to_string(art.tables.size()));
    for (const auto& [file, columns] : schema)
        if (art.table(file).columns != columns) throw domain_error("schema mismatch in " + file);
}

struct RunRecord {
    fs::path dir;
    std::vector<std::string> outputs;
    double wall_clock = 0;
    json manifest;
    Artifacts art;
};

// Runs into `dir`; manifest.json is written last so its presence marks a complete run.
inline RunRecord run_experiment(const Experiment& e, const json& cfg, std::uint64_t seed, const fs::path& dir)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord r;
    r.dir = dir;
    r.art = e.run(cfg, seed);
    check_schema(e.schema(cfg), r.art);
    ensure_dir(dir);
    for (const auto& [file, t] : r.art.tables) {
        atomic_write(dir / file, t.csv());
        r.outputs.push_back(file);
    }
    for (const auto& [file, bytes] : r.art.blobs) {
        atomic_write(dir / file, bytes);
        r.outputs.push_back(file);
    }
    atomic_write(dir / "summary.json", r.art.summary.dump(2) + "\n");
    r.outputs.push_back("summary.json");
    r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.manifest = {{"experiment", e.name}, {"config", cfg},      {"seed", seed}, {"code_version", code_version()},
                  {"outputs", r.outputs}, {"wall_clock_seconds", r.wall_clock}};
    atomic_write(dir / "manifest.json", r.manifest.dump(2) + "\n");
    return r;
}

inline fs::path run_dir(const std::string& experiment, std::uint64_t seed)
{
    return output_root() / experiment / std::to_string(seed);
}

} // namespace joma::lab
