#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/metrics.hpp"
#include "joma/core/rng.hpp"
#include "joma/dynamics/trajectory.hpp"
#include "joma/hblt/sampler.hpp"
#include "joma/model/batch.hpp"
#include "joma/model/network.hpp"
#include "joma/model/optim.hpp"
#include "joma/model/params.hpp"

namespace joma::model {

struct TrainConfig {
    ModelConfig model;
    Objective objective = Objective::cross_entropy;
    OptimizerConfig optimizer;
    long steps = 1000;
    int batch_size = 32;
    std::uint64_t seed = 0;
    long stride = 100;
    std::size_t eval_samples = 256;  // probe subset for loss, val_loss and entropy
    bool keep_weights = false;       // store every layer's W at each snapshot

    void validate() const
    {
        model.validate();
        optimizer.validate();
        if (steps < 1) throw config_error("TrainConfig: steps must be >= 1");
        if (batch_size < 1) throw config_error("TrainConfig: batch size must be >= 1");
        if (stride < 1) throw config_error("TrainConfig: stride must be >= 1");
        if (eval_samples < 1) throw config_error("TrainConfig: eval_samples must be >= 1");
    }
};

struct MetricsSnapshot {
    long step = 0;
    double loss = 0;
    double val_loss = 0;
    std::vector<double> entropy;  // per layer
    std::vector<double> srank;    // per layer, stable rank of W
};

struct MetricsSeries {
    int layers = 0;
    std::vector<MetricsSnapshot> rows;
    std::vector<std::vector<RealMatrix>> weights;  // [snapshot][layer], when kept

    void push(MetricsSnapshot s)
    {
        if (!rows.empty() && s.step <= rows.back().step) throw domain_error("MetricsSeries: step must increase");
        if (static_cast<int>(s.entropy.size()) != layers || static_cast<int>(s.srank.size()) != layers)
            throw size_error("MetricsSeries: per-layer metric count");
        rows.push_back(std::move(s));
    }

    std::vector<double> entropy_series(int layer) const
    {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.entropy[static_cast<std::size_t>(layer)]);
        return v;
    }
};

inline std::string metrics_header(int layers)
{
    std::string h = "step,loss,val_loss";
    for (int s = 0; s < layers; ++s) h += ",entropy_l" + std::to_string(s);
    for (int s = 0; s < layers; ++s) h += ",srank_l" + std::to_string(s);
    return h;
}

inline void write_csv(std::ostream& os, const MetricsSeries& m)
{
    using dyn::fmt17;
    os << metrics_header(m.layers) << '\n';
    for (const auto& r : m.rows) {
        os << r.step << ',' << fmt17(r.loss) << ',' << fmt17(r.val_loss);
        for (double e : r.entropy) os << ',' << fmt17(e);
        for (double s : r.srank) os << ',' << fmt17(s);
        os << '\n';
    }
}

// Stable rank of each stored W, [snapshot][layer].
inline std::vector<std::vector<double>> stable_rank_series(const std::vector<std::vector<RealMatrix>>& weights)
{
    std::vector<std::vector<double>> out;
    for (const auto& snap : weights) {
        std::vector<double> row;
        for (const auto& W : snap) row.push_back(num::stable_rank(W));
        out.push_back(std::move(row));
    }
    return out;
}

struct TrainResult {
    ModelParams params;
    MetricsSeries series;
};

using SnapshotObserver = std::function<void(const ModelParams&, const MetricsSnapshot&)>;

namespace detail {

inline Batch probe_batch(const ModelConfig& cfg, const std::vector<hblt::SequenceSample>& samples, std::size_t n)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < std::min(n, samples.size()); ++i) idx.push_back(i);
    return make_batch(cfg, samples, idx);
}

} // namespace detail

// Batches are drawn with replacement from `train` by a stream derived from the seed; the
// validation set (or the training probe when `val` is empty) supplies val_loss and entropy.
inline TrainResult train(const TrainConfig& cfg, const std::vector<hblt::SequenceSample>& train_set,
                         const std::vector<hblt::SequenceSample>& val_set, const SnapshotObserver& observer = {})
{
    cfg.validate();
    if (train_set.empty()) throw domain_error("train: empty corpus");
    TrainResult r{init_params(cfg.model, cfg.seed), {}};
    r.series.layers = cfg.model.layers;
    Optimizer opt(cfg.optimizer, r.params);
    num::Rng batch_rng = num::Rng(cfg.seed).split(2);
    const Batch probe = detail::probe_batch(cfg.model, train_set, cfg.eval_samples);
    const Batch val = val_set.empty() ? probe : detail::probe_batch(cfg.model, val_set, cfg.eval_samples);

    auto snapshot = [&](long step) {
        MetricsSnapshot s;
        s.step = step;
        s.loss = loss_value(r.params, probe, cfg.objective);
        const ForwardPass fp = forward(r.params, val);
        s.val_loss = loss_value(r.params, val, cfg.objective, fp);
        s.entropy = attention_entropy(r.params, fp);
        std::vector<RealMatrix> ws;
        for (const auto& l : r.params.layers) {
            s.srank.push_back(num::stable_rank(l.W));
            if (cfg.keep_weights) ws.push_back(l.W);
        }
        if (cfg.keep_weights) r.series.weights.push_back(std::move(ws));
        if (observer) observer(r.params, s);
        r.series.push(std::move(s));
    };

    snapshot(0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(cfg.batch_size));
    for (long step = 1; step <= cfg.steps; ++step) {
        for (auto& i : idx) i = static_cast<std::size_t>(batch_rng.below(train_set.size()));
        const Batch batch = make_batch(cfg.model, train_set, idx);
        auto lg = loss_and_grads(r.params, batch, cfg.objective);
        if (!std::isfinite(lg.loss))
            throw divergence_error("train: non-finite loss at step " + std::to_string(step));
        opt.step(r.params, lg.grads);
        if (!r.params.finite())
            throw divergence_error("train: non-finite parameter after step " + std::to_string(step));
        if (step % cfg.stride == 0 || step == cfg.steps) snapshot(step);
    }
    return r;
}

} // namespace joma::model
