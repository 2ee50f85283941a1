#pragma once

#include <span>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/types.hpp"
#include "joma/hblt/sampler.hpp"
#include "joma/model/params.hpp"

namespace joma::model {

// Layer-0 inputs: per sample an M_C x P matrix whose columns are frequency vectors.
struct Batch {
    std::vector<RealMatrix> X;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }

    void validate(const ModelConfig& cfg) const
    {
        if (X.size() != labels.size()) throw size_error("Batch: inputs and labels differ in count");
        for (std::size_t b = 0; b < X.size(); ++b) {
            if (X[b].rows() != cfg.vocab || X[b].cols() != cfg.positions()) throw size_error("Batch: input shape");
            if ((X[b].array() < 0).any()) throw domain_error("Batch: negative frequency");
            if (((X[b].colwise().sum().array() - 1.0).abs() > 1e-12).any())
                throw domain_error("Batch: frequency vectors must sum to 1");
            if (labels[b] < 0 || labels[b] >= cfg.classes) throw domain_error("Batch: label out of range");
        }
    }
};

inline RealMatrix frequency_inputs(const ModelConfig& cfg, const std::vector<int>& tokens)
{
    if (tokens.empty()) throw domain_error("frequency_inputs: empty sequence");
    for (int t : tokens)
        if (t < 0 || t >= cfg.vocab) throw domain_error("frequency_inputs: token out of range");
    if (cfg.mode == InputMode::frequency) {
        RealMatrix x = RealMatrix::Zero(cfg.vocab, 1);
        for (int t : tokens) x(t, 0) += 1.0;
        return x / static_cast<double>(tokens.size());
    }
    if (static_cast<int>(tokens.size()) != cfg.sequence_length)
        throw size_error("frequency_inputs: sequence length differs from the model's");
    RealMatrix x = RealMatrix::Zero(cfg.vocab, cfg.sequence_length);
    RealVector counts = RealVector::Zero(cfg.vocab);
    for (int i = 0; i < cfg.sequence_length; ++i) {
        counts(tokens[static_cast<std::size_t>(i)]) += 1.0;
        x.col(i) = counts / static_cast<double>(i + 1);
    }
    return x;
}

inline Batch make_batch(const ModelConfig& cfg, const std::vector<hblt::SequenceSample>& samples,
                        std::span<const std::size_t> indices)
{
    Batch b;
    b.X.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto& s = samples.at(i);
        b.X.push_back(frequency_inputs(cfg, s.tokens));
        b.labels.push_back(s.label);
    }
    return b;
}

inline Batch make_batch(const ModelConfig& cfg, const std::vector<hblt::SequenceSample>& samples)
{
    std::vector<std::size_t> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return make_batch(cfg, samples, idx);
}

} // namespace joma::model
