#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "joma/model/network.hpp"

namespace joma::model {

struct GradcheckReport {
    double max_rel_error = 0;
    std::string worst_tensor;
    std::size_t entries = 0;
};

// Central differences on every trainable entry; relative error |a - n| / max(|a|, |n|, floor).
inline GradcheckReport gradcheck(ModelParams p, const Batch& batch, Objective obj, double h = 1e-5, double floor = 1e-6)
{
    const auto analytic = loss_and_grads(p, batch, obj).grads;
    auto ga = analytic;
    auto grads = ga.tensors();
    auto params = p.tensors();
    const auto names = p.tensor_names();
    GradcheckReport r;
    for (std::size_t t = 0; t < params.size(); ++t) {
        RealMatrix& m = *params[t];
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double keep = m.data()[i];
            m.data()[i] = keep + h;
            const double up = loss_value(p, batch, obj);
            m.data()[i] = keep - h;
            const double down = loss_value(p, batch, obj);
            m.data()[i] = keep;
            const double num = (up - down) / (2 * h);
            const double a = grads[t]->data()[i];
            const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
            ++r.entries;
            if (rel > r.max_rel_error) {
                r.max_rel_error = rel;
                r.worst_tensor = names[t];
            }
        }
    }
    return r;
}

} // namespace joma::model
