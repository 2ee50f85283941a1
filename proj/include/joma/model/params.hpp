#pragma once

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/rng.hpp"
#include "joma/core/types.hpp"
#include "joma/dynamics/attention.hpp"

namespace joma::model {

using dyn::AttentionKind;

enum class Activation { linear, relu };

// causal: one position per token, layer-0 input at position i is the frequency vector of tokens 0..i.
// frequency: a single position holding the frequency vector of the whole sequence.
enum class InputMode { causal, frequency };

inline std::string name(Activation a) { return a == Activation::linear ? "linear" : "relu"; }
inline std::string name(InputMode m) { return m == InputMode::causal ? "causal" : "frequency"; }

inline Activation parse_activation(const std::string& s)
{
    if (s == "linear") return Activation::linear;
    if (s == "relu") return Activation::relu;
    throw config_error("unknown activation: " + s);
}

inline InputMode parse_input_mode(const std::string& s)
{
    if (s == "causal") return InputMode::causal;
    if (s == "frequency") return InputMode::frequency;
    throw config_error("unknown input mode: " + s);
}

struct ModelConfig {
    int vocab = 100;         // M_C
    int classes = 20;        // D
    int d = 128;
    int hidden = 128;        // K
    int layers = 1;          // S
    int sequence_length = 30;
    Activation activation = Activation::relu;
    AttentionKind attention = AttentionKind::softmax();
    InputMode mode = InputMode::causal;
    double z_init = 0.0;
    double w_scale = 1.0;      // W ~ N(0, w_scale^2 / d)
    double upper_scale = 1.0;  // A ~ N(0, upper_scale^2 / K)

    int positions() const { return mode == InputMode::causal ? sequence_length : 1; }

    void validate() const
    {
        if (vocab < 1 || classes < 1 || hidden < 1 || layers < 1 || sequence_length < 1)
            throw config_error("ModelConfig: sizes must be positive");
        if (d < vocab + 1) throw config_error("ModelConfig: d must hold vocab + 1 orthonormal embeddings");
        if (!std::isfinite(z_init) || !(w_scale >= 0) || !(upper_scale >= 0))
            throw config_error("ModelConfig: invalid initialization scale");
    }
};

// Z: layer 0 is 1 x M_C (one query token against the vocabulary); deeper layers are
// P x P position tables of which only the causal part j <= i is used.
struct LayerParams {
    RealMatrix Z;
    RealMatrix W;  // d x K, columns w_k
    RealMatrix A;  // d x K, upper projection back into the residual stream
};

struct ModelParams {
    ModelConfig config;
    RealMatrix U;  // d x (M_C + 1), frozen; last column is the query token
    std::vector<LayerParams> layers;
    RealMatrix C;  // D x d classifier

    auto context_embeddings() const { return U.leftCols(config.vocab); }
    auto query_embedding() const { return U.col(config.vocab); }

    // Trainable tensors in a fixed order: Z0, W0, A0, Z1, ..., C.
    std::vector<RealMatrix*> tensors()
    {
        std::vector<RealMatrix*> t;
        for (auto& l : layers) {
            t.push_back(&l.Z);
            t.push_back(&l.W);
            t.push_back(&l.A);
        }
        t.push_back(&C);
        return t;
    }
    std::vector<const RealMatrix*> tensors() const
    {
        std::vector<const RealMatrix*> t;
        for (const auto& l : layers) {
            t.push_back(&l.Z);
            t.push_back(&l.W);
            t.push_back(&l.A);
        }
        t.push_back(&C);
        return t;
    }
    std::vector<std::string> tensor_names() const
    {
        std::vector<std::string> n;
        for (std::size_t s = 0; s < layers.size(); ++s)
            for (const char* p : {"Z", "W", "A"}) n.push_back(p + std::to_string(s));
        n.push_back("C");
        return n;
    }

    bool finite() const
    {
        for (auto* t : tensors())
            if (!t->allFinite()) return false;
        return true;
    }
};

// Same layout as the trainable part of ModelParams.
struct ModelGrads {
    std::vector<LayerParams> layers;
    RealMatrix C;

    static ModelGrads zeros_like(const ModelParams& p)
    {
        ModelGrads g;
        for (const auto& l : p.layers)
            g.layers.push_back({RealMatrix::Zero(l.Z.rows(), l.Z.cols()), RealMatrix::Zero(l.W.rows(), l.W.cols()),
                                RealMatrix::Zero(l.A.rows(), l.A.cols())});
        g.C = RealMatrix::Zero(p.C.rows(), p.C.cols());
        return g;
    }

    std::vector<RealMatrix*> tensors()
    {
        std::vector<RealMatrix*> t;
        for (auto& l : layers) {
            t.push_back(&l.Z);
            t.push_back(&l.W);
            t.push_back(&l.A);
        }
        t.push_back(&C);
        return t;
    }

    double max_abs() const
    {
        double m = C.cwiseAbs().maxCoeff();
        for (const auto& l : layers)
            m = std::max({m, l.Z.cwiseAbs().maxCoeff(), l.W.cwiseAbs().maxCoeff(), l.A.cwiseAbs().maxCoeff()});
        return m;
    }
};

inline RealMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, num::Rng& rng)
{
    RealMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
    return m;
}

// d x n matrix with orthonormal columns from the QR factor of a Gaussian matrix.
inline RealMatrix orthonormal_embeddings(int d, int n, num::Rng& rng)
{
    if (n > d) throw domain_error("orthonormal_embeddings: more columns than dimensions");
    const RealMatrix g = gaussian_matrix(d, n, 1.0, rng);
    Eigen::HouseholderQR<RealMatrix> qr(g);
    RealMatrix q = qr.householderQ() * RealMatrix::Identity(d, n);
    const double err = (q.transpose() * q - RealMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (err > 1e-10) throw degenerate_error("orthonormal_embeddings: U^T U deviates from identity");
    return q;
}

inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    num::Rng root(seed);
    num::Rng emb = root.split(0), wts = root.split(1);
    ModelParams p;
    p.config = cfg;
    p.U = orthonormal_embeddings(cfg.d, cfg.vocab + 1, emb);
    const int P = cfg.positions();
    for (int s = 0; s < cfg.layers; ++s) {
        LayerParams l;
        l.Z = s == 0 ? RealMatrix::Constant(1, cfg.vocab, cfg.z_init) : RealMatrix::Constant(P, P, cfg.z_init);
        l.W = gaussian_matrix(cfg.d, cfg.hidden, cfg.w_scale / std::sqrt(cfg.d), wts);
        l.A = gaussian_matrix(cfg.d, cfg.hidden, cfg.upper_scale / std::sqrt(cfg.hidden), wts);
        p.layers.push_back(std::move(l));
    }
    p.C = gaussian_matrix(cfg.classes, cfg.d, 1.0 / std::sqrt(cfg.d), wts);
    return p;
}

} // namespace joma::model
