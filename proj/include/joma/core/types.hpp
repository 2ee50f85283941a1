#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "errors.hpp"

namespace joma {

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a)
{
    return a.allFinite();
}

template <class Derived>
void require_finite(const Eigen::DenseBase<Derived>& a, const std::string& what)
{
    if (!a.allFinite()) throw domain_error(what + ": non-finite entry");
}

inline void require_finite(double x, const std::string& what)
{
    if (!std::isfinite(x)) throw domain_error(what + ": non-finite value");
}

} // namespace joma
