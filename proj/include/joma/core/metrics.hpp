#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace joma::num {

// Shannon entropy in nats; 0 ln 0 = 0.
inline double entropy(std::span<const double> p, double tol = 1e-8)
{
    if (p.empty()) throw domain_error("entropy: empty distribution");
    double sum = 0.0, h = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < -tol) throw domain_error("entropy: invalid probability entry");
        sum += v;
        if (v > 0) h -= v * std::log(v);
    }
    if (std::abs(sum - 1.0) > tol) throw domain_error("entropy: probabilities do not sum to 1");
    return std::max(h, 0.0);
}

inline double entropy(const RealVector& p, double tol = 1e-8)
{
    return entropy(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), tol);
}

inline RealVector softmax(const RealVector& a)
{
    if (a.size() == 0) throw domain_error("softmax: empty input");
    RealVector e = (a.array() - a.maxCoeff()).exp();
    return e / e.sum();
}

// ||W||_F^2 / sigma_max^2, sigma_max by power iteration on W^T W from the all-ones vector.
inline double stable_rank(const RealMatrix& W, double rel_tol = 1e-10, int max_iter = 100000)
{
    require_finite(W, "stable_rank");
    const double fro2 = W.squaredNorm();
    if (fro2 == 0.0) throw degenerate_error("stable_rank: zero matrix");
    const bool tall = W.rows() >= W.cols();
    RealVector x = RealVector::Ones(tall ? W.cols() : W.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        RealVector y = tall ? RealVector(W.transpose() * (W * x)) : RealVector(W * (W.transpose() * x));
        double norm = y.norm();
        if (norm == 0.0) {
            // all-ones start orthogonal to the row space; restart from a fixed basis vector
            x.setZero();
            x(it % x.size()) = 1.0;
            continue;
        }
        const double next = x.dot(y);
        x = y / norm;
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return fro2 / lambda;
}

inline double mean_abs_cossim(const RealMatrix& W)
{
    if (W.cols() < 2) throw domain_error("mean_abs_cossim: need at least 2 columns");
    RealVector norms = W.colwise().norm();
    for (Eigen::Index j = 0; j < norms.size(); ++j)
        if (norms(j) == 0.0) throw degenerate_error("mean_abs_cossim: zero column");
    RealMatrix Wn = W * norms.cwiseInverse().asDiagonal();
    RealMatrix G = Wn.transpose() * Wn;
    double sum = 0.0;
    const Eigen::Index n = W.cols();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) sum += std::min(1.0, std::abs(G(i, j)));
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

// Pearson correlation; 0 when either side has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.empty()) throw domain_error("pearson: size mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace joma::num
