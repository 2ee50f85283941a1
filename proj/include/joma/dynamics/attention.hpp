#pragma once

#include <cmath>
#include <string>

#include "joma/core/errors.hpp"
#include "joma/core/types.hpp"

namespace joma::dyn {

struct AttentionKind {
    enum class Tag { linear, exp, softmax };

    Tag tag = Tag::softmax;
    double normalizer = 1.0;  // A, exp attention only

    static AttentionKind linear() { return {Tag::linear, 1.0}; }
    static AttentionKind exp(double A = 1.0)
    {
        if (!(A > 0) || !std::isfinite(A)) throw domain_error("exp attention: normalizer must be > 0");
        return {Tag::exp, A};
    }
    static AttentionKind softmax() { return {Tag::softmax, 1.0}; }

    std::string name() const
    {
        switch (tag) {
        case Tag::linear: return "linear";
        case Tag::exp: return "exp";
        case Tag::softmax: return "softmax";
        }
        return "?";
    }

    static AttentionKind parse(const std::string& s, double A = 1.0)
    {
        if (s == "linear") return linear();
        if (s == "exp") return exp(A);
        if (s == "softmax") return softmax();
        throw domain_error("unknown attention kind: " + s);
    }

    bool operator==(const AttentionKind&) const = default;
};

inline RealVector attention_reweight(const RealVector& z, const RealVector& x, const AttentionKind& kind)
{
    if (z.size() != x.size()) throw domain_error("attention_reweight: dimension mismatch");
    if ((x.array() < 0).any()) throw domain_error("attention_reweight: negative frequency");
    switch (kind.tag) {
    case AttentionKind::Tag::linear: return z.cwiseProduct(x);
    case AttentionKind::Tag::exp: return RealVector(z.array().exp() * x.array() / kind.normalizer);
    case AttentionKind::Tag::softmax: {
        if (z.size() == 0) throw degenerate_error("softmax attention: empty context");
        const double zmax = z.maxCoeff();
        RealVector e = (z.array() - zmax).exp() * x.array();
        const double s = e.sum();
        if (!(s > 0)) throw degenerate_error("softmax attention: zero normalizer");
        return e / s;
    }
    }
    return {};
}

// (db/dz)^T g, with b = attention_reweight(z, x, kind) already evaluated.
inline RealVector attention_vjp(const RealVector& x, const RealVector& b, const RealVector& g,
                                const AttentionKind& kind)
{
    switch (kind.tag) {
    case AttentionKind::Tag::linear: return x.cwiseProduct(g);
    case AttentionKind::Tag::exp: return b.cwiseProduct(g);
    case AttentionKind::Tag::softmax: return b.cwiseProduct(g) - b * b.dot(g);
    }
    return {};
}

} // namespace joma::dyn
