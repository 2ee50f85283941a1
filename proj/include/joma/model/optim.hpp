#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/model/params.hpp"

namespace joma::model {

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::string name() const { return kind == Kind::sgd ? "sgd" : "adam"; }

    static Kind parse(const std::string& s)
    {
        if (s == "sgd") return Kind::sgd;
        if (s == "adam") return Kind::adam;
        throw config_error("unknown optimizer: " + s);
    }

    void validate() const
    {
        if (!(lr >= 0) || !std::isfinite(lr)) throw config_error("optimizer: learning rate must be >= 0");
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw config_error("optimizer: betas in [0, 1)");
        if (!(eps > 0)) throw config_error("optimizer: eps must be > 0");
    }
};

class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, const ModelParams& p) : cfg_(cfg)
    {
        cfg.validate();
        for (const auto* t : p.tensors()) {
            m_.push_back(RealMatrix::Zero(t->rows(), t->cols()));
            v_.push_back(RealMatrix::Zero(t->rows(), t->cols()));
        }
    }

    long steps() const { return t_; }

    void step(ModelParams& p, ModelGrads& g)
    {
        ++t_;
        auto params = p.tensors();
        auto grads = g.tensors();
        if (params.size() != grads.size()) throw size_error("Optimizer: gradient layout mismatch");
        if (cfg_.kind == OptimizerConfig::Kind::sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= cfg_.lr * *grads[i];
            return;
        }
        const double c1 = 1 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1 - cfg_.beta1) * *grads[i];
            v_[i] = cfg_.beta2 * v_[i] + (1 - cfg_.beta2) * grads[i]->cwiseAbs2();
            params[i]->array() -= cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
        }
    }

private:
    OptimizerConfig cfg_;
    long t_ = 0;
    std::vector<RealMatrix> m_, v_;
};

} // namespace joma::model
