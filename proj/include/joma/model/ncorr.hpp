#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/rng.hpp"
#include "joma/core/types.hpp"
#include "joma/dynamics/trajectory.hpp"
#include "joma/hblt/sampler.hpp"
#include "joma/hblt/tree.hpp"
#include "joma/model/network.hpp"

namespace joma::model {

// Per sample, the maximum over positions of each hidden unit of `layer`: samples x K.
inline RealMatrix max_activations(const ModelParams& p, const Batch& batch, int layer, std::size_t chunk = 256)
{
    if (layer < 0 || layer >= static_cast<int>(p.layers.size())) throw domain_error("max_activations: bad layer");
    const int P = p.config.positions();
    RealMatrix out(static_cast<Eigen::Index>(batch.size()), p.config.hidden);
    for (std::size_t lo = 0; lo < batch.size(); lo += chunk) {
        const std::size_t hi = std::min(batch.size(), lo + chunk);
        Batch part;
        part.X.assign(batch.X.begin() + static_cast<std::ptrdiff_t>(lo), batch.X.begin() + static_cast<std::ptrdiff_t>(hi));
        part.labels.assign(batch.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                           batch.labels.begin() + static_cast<std::ptrdiff_t>(hi));
        const ForwardPass fp = forward(p, part);
        const RealMatrix& H = fp.layers[static_cast<std::size_t>(layer)].H;
        for (std::size_t b = 0; b < part.size(); ++b)
            out.row(static_cast<Eigen::Index>(lo + b)) =
                H.middleCols(static_cast<Eigen::Index>(b) * P, P).rowwise().maxCoeff().transpose();
    }
    return out;
}

// samples x (latents at `level`), entries 0/1.
inline RealMatrix latent_matrix(const std::vector<hblt::SequenceSample>& samples, const hblt::LatentTree& tree, int level)
{
    if (level < 0 || level >= tree.depth()) throw domain_error("latent_matrix: bad level");
    const int n = tree.layer_sizes[static_cast<std::size_t>(level)], off = tree.offset[static_cast<std::size_t>(level)];
    RealMatrix m(static_cast<Eigen::Index>(samples.size()), n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].latents.size() != static_cast<std::size_t>(tree.nodes()))
            throw domain_error("latent_matrix: sample has no latent assignment");
        for (int j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(i), j) = samples[i].latents[static_cast<std::size_t>(off + j)];
    }
    return m;
}

// Tree level whose latents are compared with hidden layer s: the level just above the
// tokens for s = 0, one level higher per layer.
inline int latent_level_for_layer(const hblt::LatentTree& tree, int s) { return tree.depth() - 2 - s; }

struct NcorrEntry {
    int layer = 0;
    int latent_id = 0;
    int best_neuron = -1;
    double ncorr = 0;
};

struct NcorrLayer {
    int layer = 0;
    std::vector<NcorrEntry> entries;
    double mean = 0;
    double std = 0;
};

namespace detail {

// Centre each column and scale it to unit norm; zero-variance columns stay zero.
inline RealMatrix standardize_columns(const RealMatrix& a)
{
    RealMatrix c = a.rowwise() - a.colwise().mean();
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double n = c.col(j).norm();
        if (n > 1e-12 * std::max(1.0, a.col(j).cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(a.rows())))
            c.col(j) /= n;
        else
            c.col(j).setZero();
    }
    return c;
}

} // namespace detail

// For each latent, the best normalized correlation over hidden units (0 when either side is constant).
inline NcorrLayer ncorr(const RealMatrix& activations, const RealMatrix& latents, int layer)
{
    if (activations.rows() != latents.rows()) throw size_error("ncorr: sample counts differ");
    if (activations.rows() < 2) throw domain_error("ncorr: need at least two samples");
    const RealMatrix corr = detail::standardize_columns(activations).transpose() * detail::standardize_columns(latents);
    NcorrLayer out;
    out.layer = layer;
    for (Eigen::Index a = 0; a < corr.cols(); ++a) {
        Eigen::Index k = 0;
        const double best = corr.col(a).maxCoeff(&k);
        out.entries.push_back({layer, static_cast<int>(a), static_cast<int>(k), best});
    }
    double s = 0, s2 = 0;
    for (const auto& e : out.entries) {
        s += e.ncorr;
        s2 += e.ncorr * e.ncorr;
    }
    const double n = static_cast<double>(out.entries.size());
    out.mean = s / n;
    out.std = std::sqrt(std::max(0.0, s2 / n - out.mean * out.mean));
    return out;
}

// Same statistic with latent rows shuffled across samples.
inline NcorrLayer ncorr_null(const RealMatrix& activations, const RealMatrix& latents, int layer, num::Rng& rng)
{
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(latents.rows()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
    rng.shuffle(perm);
    RealMatrix shuffled(latents.rows(), latents.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.row(static_cast<Eigen::Index>(i)) = latents.row(perm[i]);
    return ncorr(activations, shuffled, layer);
}

inline void write_ncorr_csv(std::ostream& os, const std::vector<NcorrLayer>& layers)
{
    os << "layer,latent_id,best_neuron,ncorr\n";
    for (const auto& l : layers)
        for (const auto& e : l.entries)
            os << e.layer << ',' << e.latent_id << ',' << e.best_neuron << ',' << dyn::fmt17(e.ncorr) << '\n';
}

} // namespace joma::model
