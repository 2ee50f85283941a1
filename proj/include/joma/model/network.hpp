#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/metrics.hpp"
#include "joma/core/types.hpp"
#include "joma/dynamics/attention.hpp"
#include "joma/model/batch.hpp"
#include "joma/model/params.hpp"

namespace joma::model {

// node_payoff: maximize E[sum_k g_k h_k] on the layer-0 hidden units at the last position,
// with g_k = 1 when hidden unit k is assigned to the sample's class (k mod D) and 0 otherwise.
enum class Objective { cross_entropy, node_payoff };

inline std::string name(Objective o) { return o == Objective::cross_entropy ? "cross-entropy" : "node-payoff"; }

inline Objective parse_objective(const std::string& s)
{
    if (s == "cross-entropy") return Objective::cross_entropy;
    if (s == "node-payoff") return Objective::node_payoff;
    throw config_error("unknown objective: " + s);
}

// Columns of every N-column matrix are (sample b, position i) at b * P + i.
struct LayerCache {
    RealMatrix F;     // d x N, MLP input
    RealMatrix Hpre;  // K x N
    RealMatrix H;     // K x N
    RealMatrix O;     // d x N, layer output
    RealMatrix B0;               // layer 0: M_C x N attention scores
    std::vector<RealMatrix> Bp;  // deeper layers: per sample P x P, row i over positions j <= i
};

struct ForwardPass {
    std::vector<LayerCache> layers;
    RealMatrix logits;  // D x batch
};

namespace detail {

inline RealMatrix activate(const RealMatrix& x, Activation a)
{
    return a == Activation::linear ? x : RealMatrix(x.cwiseMax(0.0));
}

inline RealMatrix activate_grad(const RealMatrix& x, Activation a)
{
    if (a == Activation::linear) return RealMatrix::Ones(x.rows(), x.cols());
    return (x.array() > 0).cast<double>().matrix();
}

inline RealVector causal_weights(int i) { return RealVector::Constant(i + 1, 1.0 / (i + 1)); }

} // namespace detail

inline ForwardPass forward(const ModelParams& p, const Batch& batch)
{
    const auto& cfg = p.config;
    batch.validate(cfg);
    const int P = cfg.positions();
    const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index N = B * P;
    ForwardPass fp;
    fp.layers.resize(p.layers.size());
    for (std::size_t s = 0; s < p.layers.size(); ++s) {
        const auto& L = p.layers[s];
        auto& c = fp.layers[s];
        if (s == 0) {
            c.B0.resize(cfg.vocab, N);
            const RealVector z = L.Z.row(0).transpose();
            for (Eigen::Index b = 0; b < B; ++b)
                for (int i = 0; i < P; ++i)
                    c.B0.col(b * P + i) =
                        dyn::attention_reweight(z, batch.X[static_cast<std::size_t>(b)].col(i), cfg.attention);
            c.F = p.context_embeddings() * c.B0;
            c.F.colwise() += p.query_embedding();
        } else {
            const RealMatrix& prev = fp.layers[s - 1].O;
            c.F.resize(cfg.d, N);
            c.Bp.resize(static_cast<std::size_t>(B));
            for (Eigen::Index b = 0; b < B; ++b) {
                RealMatrix& Bm = c.Bp[static_cast<std::size_t>(b)];
                Bm = RealMatrix::Zero(P, P);
                for (int i = 0; i < P; ++i)
                    Bm.row(i).head(i + 1) = dyn::attention_reweight(L.Z.row(i).head(i + 1).transpose(),
                                                                    detail::causal_weights(i), cfg.attention)
                                                .transpose();
                c.F.middleCols(b * P, P).noalias() = prev.middleCols(b * P, P) * Bm.transpose();
            }
        }
        c.Hpre.noalias() = L.W.transpose() * c.F;
        c.H = detail::activate(c.Hpre, cfg.activation);
        c.O = c.F;
        c.O.noalias() += L.A * c.H;
    }
    RealMatrix last(cfg.d, B);
    for (Eigen::Index b = 0; b < B; ++b) last.col(b) = fp.layers.back().O.col(b * P + P - 1);
    fp.logits.noalias() = p.C * last;
    return fp;
}

inline double cross_entropy(const RealMatrix& logits, const std::vector<int>& labels)
{
    double total = 0;
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        const double m = logits.col(b).maxCoeff();
        const double lse = m + std::log((logits.col(b).array() - m).exp().sum());
        total += lse - logits(labels[static_cast<std::size_t>(b)], b);
    }
    return total / static_cast<double>(logits.cols());
}

inline double payoff_weight(int k, int label, int classes) { return k % classes == label ? 1.0 : 0.0; }

inline double loss_value(const ModelParams& p, const Batch& batch, Objective obj, const ForwardPass& fp)
{
    if (obj == Objective::cross_entropy) return cross_entropy(fp.logits, batch.labels);
    const int P = p.config.positions();
    const RealMatrix& H = fp.layers.front().H;
    double total = 0;
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (Eigen::Index k = 0; k < H.rows(); ++k)
            total += payoff_weight(static_cast<int>(k), batch.labels[b], p.config.classes) *
                     H(k, static_cast<Eigen::Index>(b) * P + P - 1);
    return -total / static_cast<double>(batch.size());
}

inline double loss_value(const ModelParams& p, const Batch& batch, Objective obj)
{
    return loss_value(p, batch, obj, forward(p, batch));
}

struct LossAndGrads {
    double loss = 0;
    ModelGrads grads;
};

// Reverse-mode gradients of the batch-mean objective; U receives none.
inline LossAndGrads loss_and_grads(const ModelParams& p, const Batch& batch, Objective obj)
{
    const auto& cfg = p.config;
    const ForwardPass fp = forward(p, batch);
    const int P = cfg.positions();
    const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index N = B * P;
    LossAndGrads out;
    out.loss = loss_value(p, batch, obj, fp);
    out.grads = ModelGrads::zeros_like(p);
    auto& g = out.grads;

    RealMatrix dO = RealMatrix::Zero(cfg.d, N);
    RealMatrix dH0;  // direct payoff gradient on layer-0 hidden units
    if (obj == Objective::cross_entropy) {
        RealMatrix dlogits(fp.logits.rows(), B);
        for (Eigen::Index b = 0; b < B; ++b) {
            RealVector e = (fp.logits.col(b).array() - fp.logits.col(b).maxCoeff()).exp();
            dlogits.col(b) = e / e.sum();
            dlogits(batch.labels[static_cast<std::size_t>(b)], b) -= 1.0;
        }
        dlogits /= static_cast<double>(B);
        const RealMatrix& Olast = fp.layers.back().O;
        RealMatrix last(cfg.d, B);
        for (Eigen::Index b = 0; b < B; ++b) last.col(b) = Olast.col(b * P + P - 1);
        g.C.noalias() = dlogits * last.transpose();
        const RealMatrix dlast = p.C.transpose() * dlogits;
        for (Eigen::Index b = 0; b < B; ++b) dO.col(b * P + P - 1) = dlast.col(b);
    } else {
        dH0 = RealMatrix::Zero(cfg.hidden, N);
        for (Eigen::Index b = 0; b < B; ++b)
            for (Eigen::Index k = 0; k < cfg.hidden; ++k)
                dH0(k, b * P + P - 1) =
                    -payoff_weight(static_cast<int>(k), batch.labels[static_cast<std::size_t>(b)], cfg.classes) /
                    static_cast<double>(B);
    }

    for (std::size_t s = p.layers.size(); s-- > 0;) {
        const auto& L = p.layers[s];
        const auto& c = fp.layers[s];
        auto& gl = g.layers[s];
        gl.A.noalias() = dO * c.H.transpose();
        RealMatrix dH = L.A.transpose() * dO;
        if (s == 0 && obj == Objective::node_payoff) dH += dH0;
        const RealMatrix dHpre = dH.cwiseProduct(detail::activate_grad(c.Hpre, cfg.activation));
        gl.W.noalias() = c.F * dHpre.transpose();
        RealMatrix dF = dO;
        dF.noalias() += L.W * dHpre;
        if (s > 0) {
            const RealMatrix& prev = fp.layers[s - 1].O;
            RealMatrix dprev(cfg.d, N);
            for (Eigen::Index b = 0; b < B; ++b) {
                const RealMatrix& Bm = c.Bp[static_cast<std::size_t>(b)];
                dprev.middleCols(b * P, P).noalias() = dF.middleCols(b * P, P) * Bm;
                const RealMatrix dBm = dF.middleCols(b * P, P).transpose() * prev.middleCols(b * P, P);
                for (int i = 0; i < P; ++i)
                    gl.Z.row(i).head(i + 1) +=
                        dyn::attention_vjp(detail::causal_weights(i), Bm.row(i).head(i + 1).transpose(),
                                           dBm.row(i).head(i + 1).transpose(), cfg.attention)
                            .transpose();
            }
            dO = std::move(dprev);
        } else {
            const RealMatrix dB0 = p.context_embeddings().transpose() * dF;
            RealVector dz = RealVector::Zero(cfg.vocab);
            for (Eigen::Index b = 0; b < B; ++b)
                for (int i = 0; i < P; ++i) {
                    const Eigen::Index n = b * P + i;
                    dz += dyn::attention_vjp(batch.X[static_cast<std::size_t>(b)].col(i), c.B0.col(n), dB0.col(n),
                                             cfg.attention);
                }
            gl.Z.row(0) = dz.transpose();
        }
    }
    return out;
}

namespace detail {

inline double normalized_entropy(const RealVector& b)
{
    if ((b.array() < 0).any()) throw degenerate_error("attention_entropy: negative attention weight");
    const double s = b.sum();
    if (!(s > 0)) throw degenerate_error("attention_entropy: zero attention mass");
    return num::entropy(RealVector(b / s));
}

} // namespace detail

// Mean over samples and positions of the entropy of each (normalized) attention row.
inline std::vector<double> attention_entropy(const ModelParams& p, const ForwardPass& fp)
{
    std::vector<double> out;
    for (std::size_t s = 0; s < fp.layers.size(); ++s) {
        const auto& c = fp.layers[s];
        double total = 0;
        std::size_t count = 0;
        if (s == 0) {
            for (Eigen::Index n = 0; n < c.B0.cols(); ++n, ++count) total += detail::normalized_entropy(c.B0.col(n));
        } else {
            const int P = p.config.positions();
            for (const auto& Bm : c.Bp)
                for (int i = 0; i < P; ++i, ++count)
                    total += detail::normalized_entropy(Bm.row(i).head(i + 1).transpose());
        }
        out.push_back(total / static_cast<double>(count));
    }
    return out;
}

inline std::vector<double> attention_entropy(const ModelParams& p, const Batch& batch)
{
    return attention_entropy(p, forward(p, batch));
}

} // namespace joma::model
