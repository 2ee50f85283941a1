#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "joma/hblt.hpp"
#include "joma/lab/artifacts.hpp"
#include "joma/lab/config.hpp"
#include "joma/lab/dynamics_runs.hpp"
#include "joma/lab/io.hpp"
#include "joma/model.hpp"

namespace joma::lab {

// Runs f(0..n-1) on up to `threads` workers; results are indexed, so output does not
// depend on scheduling. The first exception (by index) is rethrown.
template <class R>
std::vector<R> parallel_map(int n, int threads, const std::function<R(int)>& f)
{
    std::vector<R> out(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> err(static_cast<std::size_t>(n));
    const int w = std::max(1, std::min(threads, n));
    auto work = [&](int start) {
        for (int i = start; i < n; i += w) {
            try {
                out[static_cast<std::size_t>(i)] = f(i);
            } catch (...) {
                err[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (w == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < w; ++t) pool.emplace_back(work, t);
        for (auto& t : pool) t.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

// HBLT corpus plus a desk-scale transformer, flattened so every knob is a top-level key.
struct TrainSetup {
    int classes = 20;
    int n_ch = 2;  // nominal fan-out, recorded only: wiring is round-robin over layer_sizes
    std::vector<int> layer_sizes{10, 20, 100};
    double rho = 0.9;
    int sequence_length = 30;
    int train_samples = 10000;
    int val_samples = 1000;
    std::string corpus;  // optional corpus file written by gen-corpus; empty = sample in memory

    int d = 128;
    int hidden = 128;
    int layers = 1;
    std::string activation = "relu";
    std::string attention = "softmax";
    std::string mode = "frequency";
    std::string objective = "cross-entropy";
    double w_scale = 1.0;
    double upper_scale = 1.0;

    std::string optimizer = "adam";
    double lr = 1e-3;
    long steps = 4000;
    int batch_size = 32;
    long stride = 100;
    int eval_samples = 500;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("classes", s.classes);
        v("n_ch", s.n_ch);
        v("layer_sizes", s.layer_sizes);
        v("rho", s.rho);
        v("sequence_length", s.sequence_length);
        v("train_samples", s.train_samples);
        v("val_samples", s.val_samples);
        v("corpus", s.corpus);
        v("d", s.d);
        v("hidden", s.hidden);
        v("layers", s.layers);
        v("activation", s.activation);
        v("attention", s.attention);
        v("mode", s.mode);
        v("objective", s.objective);
        v("w_scale", s.w_scale);
        v("upper_scale", s.upper_scale);
        v("optimizer", s.optimizer);
        v("lr", s.lr);
        v("steps", s.steps);
        v("batch_size", s.batch_size);
        v("stride", s.stride);
        v("eval_samples", s.eval_samples);
    }

    hblt::HbltSpec hblt_spec() const
    {
        hblt::HbltSpec s;
        s.depth = static_cast<int>(layer_sizes.size());
        s.classes = classes;
        s.class_prior.assign(static_cast<std::size_t>(classes), 1.0 / classes);
        s.rho = rho;
        s.layer_sizes = layer_sizes;
        s.children_per_latent = n_ch;
        s.sequence_length = sequence_length;
        return s;
    }

    model::TrainConfig train_config(std::uint64_t seed) const
    {
        model::TrainConfig c;
        c.model.vocab = layer_sizes.empty() ? 0 : layer_sizes.back();
        c.model.classes = classes;
        c.model.d = d;
        c.model.hidden = hidden;
        c.model.layers = layers;
        c.model.sequence_length = sequence_length;
        c.model.activation = model::parse_activation(activation);
        c.model.attention = parse_attention(attention);
        c.model.mode = model::parse_input_mode(mode);
        c.model.w_scale = w_scale;
        c.model.upper_scale = upper_scale;
        c.objective = model::parse_objective(objective);
        c.optimizer.kind = model::OptimizerConfig::parse(optimizer);
        c.optimizer.lr = lr;
        c.steps = steps;
        c.batch_size = batch_size;
        c.seed = seed;
        c.stride = stride;
        c.eval_samples = static_cast<std::size_t>(eval_samples);
        return c;
    }

    void validate() const
    {
        try {
            hblt_spec().validate();
            train_config(0).validate();
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            throw config_error(e.what());
        }
        require(lr >= 0, "lr must be >= 0");
        require(train_samples >= 1 && val_samples >= 1, "train_samples and val_samples must be >= 1");
        require(n_ch >= 1, "n_ch must be >= 1");
    }

    bool operator==(const TrainSetup&) const = default;
};

// ---------------------------------------------------------------- corpora

inline std::uint64_t corpus_seed(std::uint64_t seed) { return num::Rng(seed).split(7).seed(); }

inline json corpus_metadata(const hblt::HbltSpec& spec, std::size_t samples, std::uint64_t seed)
{
    const auto tree = hblt::build_tree(spec);
    return {{"layer_sizes", spec.layer_sizes},
            {"classes", spec.classes},
            {"class_prior", spec.class_prior},
            {"rho", spec.rho},
            {"children_per_latent", spec.children_per_latent},
            {"sequence_length", spec.sequence_length},
            {"samples", samples},
            {"seed", seed},
            {"wiring", "round-robin: parent(j) = j mod size of the level above"},
            {"parent", tree.parent},
            {"designated", tree.designated}};
}

struct CorpusFiles {
    std::string corpus, latents, metadata;
};

inline CorpusFiles corpus_paths(const std::string& path) { return {path, path + ".lat", path + ".json"}; }

inline std::vector<std::string> write_corpus_files(const std::string& path, const hblt::HbltSpec& spec,
                                                   const std::vector<hblt::SequenceSample>& samples,
                                                   std::uint64_t seed)
{
    const auto p = corpus_paths(path);
    std::ostringstream c, l;
    hblt::write_corpus(c, samples);
    hblt::write_latents(l, samples);
    atomic_write(p.corpus, c.str());
    atomic_write(p.latents, l.str());
    atomic_write(p.metadata, corpus_metadata(spec, samples.size(), seed).dump(2) + "\n");
    return {p.corpus, p.latents, p.metadata};
}

// Reads a corpus written by gen-corpus and copies its generator settings into `setup`.
inline std::vector<hblt::SequenceSample> read_corpus_files(TrainSetup& setup)
{
    const auto p = corpus_paths(setup.corpus);
    json meta;
    try {
        meta = json::parse(read_file(p.metadata));
    } catch (const json::exception& e) {
        throw io_error("corpus metadata does not parse: " + std::string(e.what()));
    }
    try {
        setup.layer_sizes = meta.at("layer_sizes").get<std::vector<int>>();
        setup.classes = meta.at("classes").get<int>();
        setup.rho = meta.at("rho").get<double>();
        setup.n_ch = meta.at("children_per_latent").get<int>();
        setup.sequence_length = meta.at("sequence_length").get<int>();
    } catch (const json::exception& e) {
        throw io_error("corpus metadata incomplete: " + std::string(e.what()));
    }
    std::istringstream cs(read_file(p.corpus)), ls(read_file(p.latents));
    auto samples = hblt::read_corpus(cs);
    hblt::read_latents(ls, samples);
    setup.validate();
    return samples;
}

// gen-corpus: the HBLT keys of TrainSetup plus a sample count.
struct GenCorpusConfig {
    int classes = 20;
    int n_ch = 2;
    std::vector<int> layer_sizes{10, 20, 100};
    double rho = 0.9;
    int sequence_length = 30;
    int samples = 11000;
    int threads = 1;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        v("classes", s.classes);
        v("n_ch", s.n_ch);
        v("layer_sizes", s.layer_sizes);
        v("rho", s.rho);
        v("sequence_length", s.sequence_length);
        v("samples", s.samples);
        v("threads", s.threads);
    }

    TrainSetup setup() const
    {
        TrainSetup t;
        t.classes = classes;
        t.n_ch = n_ch;
        t.layer_sizes = layer_sizes;
        t.rho = rho;
        t.sequence_length = sequence_length;
        return t;
    }

    void validate() const
    {
        try {
            setup().hblt_spec().validate();
        } catch (const std::exception& e) {
            throw config_error(e.what());
        }
        require(samples >= 1 && threads >= 1, "samples and threads must be >= 1");
    }

    bool operator==(const GenCorpusConfig&) const = default;
};

// Same stream as the in-memory corpus of a training run with this seed.
inline std::vector<std::string> gen_corpus(const GenCorpusConfig& cfg, std::uint64_t seed, const std::string& path)
{
    cfg.validate();
    const auto spec = cfg.setup().hblt_spec();
    const auto samples = hblt::sample(spec, static_cast<std::size_t>(cfg.samples), corpus_seed(seed), cfg.threads);
    return write_corpus_files(path, spec, samples, corpus_seed(seed));
}

struct Corpus {
    hblt::HbltSpec spec;
    hblt::LatentTree tree;
    std::vector<hblt::SequenceSample> train, val;
};

inline Corpus make_corpus(TrainSetup& setup, std::uint64_t seed, int threads = 1)
{
    std::vector<hblt::SequenceSample> all;
    if (setup.corpus.empty()) {
        all = hblt::sample(setup.hblt_spec(), static_cast<std::size_t>(setup.train_samples + setup.val_samples),
                           corpus_seed(seed), threads);
    } else {
        all = read_corpus_files(setup);
    }
    const auto need = static_cast<std::size_t>(setup.train_samples + setup.val_samples);
    if (all.size() < need)
        throw config_error("corpus has " + std::to_string(all.size()) + " samples, need " + std::to_string(need));
    Corpus c;
    c.spec = setup.hblt_spec();
    c.tree = hblt::build_tree(c.spec);
    c.train.assign(all.begin(), all.begin() + setup.train_samples);
    c.val.assign(all.begin() + setup.train_samples, all.begin() + static_cast<std::ptrdiff_t>(need));
    return c;
}

inline void append_metrics(Table& t, const model::MetricsSeries& m, const std::vector<double>& prefix)
{
    for (const auto& r : m.rows) {
        std::vector<double> row = prefix;
        row.push_back(double(r.step));
        row.push_back(r.loss);
        row.push_back(r.val_loss);
        for (double e : r.entropy) row.push_back(e);
        for (double s : r.srank) row.push_back(s);
        t.add(std::move(row));
    }
}

inline std::vector<std::string> metrics_columns(int layers)
{
    return concat(concat({"step", "loss", "val_loss"}, indexed("entropy_l", layers)), indexed("srank_l", layers));
}

// ---------------------------------------------------------------- table1-ncorr

struct Table1Config {
    TrainSetup train;
    int seeds = 5;
    int threads = 1;

    Table1Config()
    {
        train.rho = 0.99;
        train.train_samples = 18000;
        train.val_samples = 1000;
        train.hidden = 2048;
        train.layers = 3;
        train.lr = 1e-3;
        train.steps = 2000;
        train.stride = 500;
    }

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        TrainSetup::fields(s.train, v);
        v("seeds", s.seeds);
        v("threads", s.threads);
    }

    void validate() const
    {
        train.validate();
        require(seeds >= 1 && threads >= 1, "seeds and threads must be >= 1");
    }

    bool operator==(const Table1Config&) const = default;
};

struct SeedNcorr {
    std::uint64_t seed = 0;
    model::MetricsSeries series;
    std::vector<model::NcorrLayer> layers, nulls;
};

struct Table1Result {
    std::vector<SeedNcorr> runs;
    std::vector<double> mean_ncorr;  // per layer, mean over seeds of the per-seed latent mean
    std::vector<double> mean_null;
    Artifacts art;
};

// NCorr layers: every transformer layer that has a latent level above the leaves to compare with.
inline int ncorr_layers(const TrainSetup& s) { return std::min(s.layers, static_cast<int>(s.layer_sizes.size()) - 1); }

inline SeedNcorr table1_seed(TrainSetup setup, std::uint64_t seed)
{
    auto corpus = make_corpus(setup, seed);
    auto tr = model::train(setup.train_config(seed), corpus.train, corpus.val);
    SeedNcorr out;
    out.seed = seed;
    out.series = std::move(tr.series);
    const auto batch = model::make_batch(setup.train_config(seed).model, corpus.val);
    num::Rng null_rng = num::Rng(seed).split(11);
    for (int s = 0; s < ncorr_layers(setup); ++s) {
        const RealMatrix act = model::max_activations(tr.params, batch, s);
        const RealMatrix lat = model::latent_matrix(corpus.val, corpus.tree, model::latent_level_for_layer(corpus.tree, s));
        out.layers.push_back(model::ncorr(act, lat, s));
        out.nulls.push_back(model::ncorr_null(act, lat, s, null_rng));
    }
    return out;
}

inline Table1Result table1_run(const Table1Config& cfg, std::uint64_t seed)
{
    cfg.validate();
    Table1Result out;
    out.runs = parallel_map<SeedNcorr>(cfg.seeds, cfg.threads,
                                       [&](int i) { return table1_seed(cfg.train, seed + static_cast<std::uint64_t>(i)); });
    const int L = ncorr_layers(cfg.train);
    out.mean_ncorr.assign(static_cast<std::size_t>(L), 0.0);
    out.mean_null.assign(static_cast<std::size_t>(L), 0.0);
    auto& sm = out.art.add_table("ncorr.csv", {"seed", "layer", "mean", "std", "null_mean"});
    auto& nc = out.art.add_table("ncorr_latents.csv", {"seed", "layer", "latent_id", "best_neuron", "ncorr"});
    auto& mt = out.art.add_table("metrics.csv", concat({"seed"}, metrics_columns(cfg.train.layers)));
    for (const auto& r : out.runs) {
        for (int s = 0; s < L; ++s) {
            const auto& layer = r.layers[static_cast<std::size_t>(s)];
            for (const auto& e : layer.entries)
                nc.add({double(r.seed), double(s), double(e.latent_id), double(e.best_neuron), e.ncorr});
            sm.add({double(r.seed), double(s), layer.mean, layer.std, r.nulls[static_cast<std::size_t>(s)].mean});
            out.mean_ncorr[static_cast<std::size_t>(s)] += layer.mean / cfg.seeds;
            out.mean_null[static_cast<std::size_t>(s)] += r.nulls[static_cast<std::size_t>(s)].mean / cfg.seeds;
        }
        append_metrics(mt, r.series, {double(r.seed)});
    }
    out.art.summary = {{"mean_ncorr", out.mean_ncorr}, {"mean_null", out.mean_null}};
    return out;
}

// ---------------------------------------------------------------- entropy-lr-sweep

struct LrSweepConfig {
    TrainSetup train;
    std::vector<double> lrs{4e-3, 1e-2, 2e-2};
    int threads = 1;

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        TrainSetup::fields(s.train, v);
        v("lrs", s.lrs);
        v("threads", s.threads);
    }

    void validate() const
    {
        train.validate();
        require(!lrs.empty(), "lrs must be non-empty");
        for (double lr : lrs) require(lr >= 0 && std::isfinite(lr), "every lr must be >= 0");
        require(threads >= 1, "threads must be >= 1");
    }

    bool operator==(const LrSweepConfig&) const = default;
};

struct LrSweepResult {
    std::vector<model::MetricsSeries> series;
    std::vector<double> terminal_entropy;  // layer 0
    bool decreasing = false;               // strictly decreasing in lr (lrs taken in listed order)
    Artifacts art;
};

// Every point shares the corpus and initialization; only the learning rate differs.
inline LrSweepResult lr_sweep_run(const LrSweepConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    TrainSetup setup = cfg.train;
    const auto corpus = make_corpus(setup, seed);
    LrSweepResult out;
    out.series = parallel_map<model::MetricsSeries>(static_cast<int>(cfg.lrs.size()), cfg.threads, [&](int i) {
        TrainSetup s = setup;
        s.lr = cfg.lrs[static_cast<std::size_t>(i)];
        return model::train(s.train_config(seed), corpus.train, corpus.val).series;
    });
    auto& mt = out.art.add_table("metrics.csv", concat({"lr"}, metrics_columns(setup.layers)));
    auto& sm = out.art.add_table("summary.csv", {"lr", "terminal_entropy", "min_entropy", "final_val_loss"});
    for (std::size_t i = 0; i < cfg.lrs.size(); ++i) {
        const auto& m = out.series[i];
        append_metrics(mt, m, {cfg.lrs[i]});
        const auto h = m.entropy_series(0);
        out.terminal_entropy.push_back(h.back());
        sm.add({cfg.lrs[i], h.back(), *std::min_element(h.begin(), h.end()), m.rows.back().val_loss});
    }
    out.decreasing = true;
    for (std::size_t i = 1; i < cfg.lrs.size(); ++i)
        out.decreasing &= cfg.lrs[i] > cfg.lrs[i - 1] && out.terminal_entropy[i] < out.terminal_entropy[i - 1];
    out.art.summary = {{"terminal_entropy", out.terminal_entropy}, {"decreasing", out.decreasing}};
    return out;
}

// ---------------------------------------------------------------- rank-series

struct RankSeriesConfig {
    TrainSetup train;
    bool save_weights = true;

    RankSeriesConfig() { train.stride = 100; }

    template <class S, class V>
    static void fields(S& s, V&& v)
    {
        TrainSetup::fields(s.train, v);
        v("save_weights", s.save_weights);
    }

    void validate() const { train.validate(); }

    bool operator==(const RankSeriesConfig&) const = default;
};

struct RankSeriesResult {
    model::MetricsSeries series;
    std::vector<EntropyDip> entropy_dip;  // per layer
    std::vector<EntropyDip> rank_dip;     // per layer, on stable rank
    Artifacts art;
};

inline RankSeriesResult rank_series_run(const RankSeriesConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    TrainSetup setup = cfg.train;
    const auto corpus = make_corpus(setup, seed);
    auto tc = setup.train_config(seed);
    tc.keep_weights = cfg.save_weights;
    auto tr = model::train(tc, corpus.train, corpus.val);
    RankSeriesResult out;
    out.series = std::move(tr.series);
    append_metrics(out.art.add_table("metrics.csv", metrics_columns(setup.layers)), out.series, {});
    std::vector<double> steps;
    for (const auto& r : out.series.rows) steps.push_back(double(r.step));
    json ent = json::array(), rank = json::array();
    for (int s = 0; s < setup.layers; ++s) {
        std::vector<double> sr;
        for (const auto& r : out.series.rows) sr.push_back(r.srank[static_cast<std::size_t>(s)]);
        if (steps.size() >= 3) {
            out.entropy_dip.push_back(entropy_dip(steps, out.series.entropy_series(s)));
            out.rank_dip.push_back(entropy_dip(steps, sr));
            const auto& e = out.entropy_dip.back();
            const auto& k = out.rank_dip.back();
            ent.push_back({{"start", e.start}, {"min", e.min}, {"end", e.end}, {"interior", e.interior}});
            rank.push_back({{"start", k.start}, {"min", k.min}, {"end", k.end}, {"interior", k.interior}});
        }
    }
    if (cfg.save_weights) {
        std::vector<model::NamedTensor> ws;
        for (std::size_t i = 0; i < out.series.weights.size(); ++i)
            for (std::size_t s = 0; s < out.series.weights[i].size(); ++s)
                ws.push_back({"W" + std::to_string(s) + "@" + std::to_string(out.series.rows[i].step),
                              out.series.weights[i][s]});
        std::ostringstream os;
        model::write_checkpoint(os, ws);
        out.art.blobs.push_back({"weights.bin", os.str()});
    }
    std::ostringstream ck;
    model::write_checkpoint(ck, model::param_tensors(tr.params));
    out.art.blobs.push_back({"final_params.bin", ck.str()});
    out.art.summary = {{"entropy", ent}, {"stable_rank", rank}};
    return out;
}

} // namespace joma::lab
