#pragma once

#include <stdexcept>
#include <string>

namespace joma {

// Argument outside the documented domain of an operation.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Zero matrix, zero column, zero marginal, empty active set, degenerate softmax.
struct degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or parameter.
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct size_error : std::length_error {
    using std::length_error::length_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw domain_error(what);
}

} // namespace joma
