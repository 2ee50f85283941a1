#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/core/types.hpp"
#include "joma/model/params.hpp"

namespace joma::model {

static_assert(std::endian::native == std::endian::little, "checkpoint container assumes a little-endian host");

using NamedTensor = std::pair<std::string, RealMatrix>;

inline constexpr char checkpoint_magic[8] = {'J', 'O', 'M', 'A', 'C', 'K', 'P', '1'};

namespace detail {

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw io_error("checkpoint: truncated");
    return v;
}

} // namespace detail

// magic, tensor count, then per tensor: name length, name, rows, cols, row-major doubles.
inline void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& tensors)
{
    os.write(checkpoint_magic, sizeof checkpoint_magic);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
        detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) detail::put<double>(os, m(i, j));
    }
    if (!os) throw io_error("checkpoint: write failed");
}

inline std::vector<NamedTensor> read_checkpoint(std::istream& is)
{
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, checkpoint_magic, sizeof magic) != 0)
        throw io_error("checkpoint: bad magic");
    const auto n = detail::get<std::uint32_t>(is);
    std::vector<NamedTensor> out;
    for (std::uint32_t k = 0; k < n; ++k) {
        const auto len = detail::get<std::uint32_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw io_error("checkpoint: truncated name");
        const auto rows = detail::get<std::uint64_t>(is), cols = detail::get<std::uint64_t>(is);
        if (rows > (1u << 24) || cols > (1u << 24)) throw io_error("checkpoint: implausible dimensions");
        RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = detail::get<double>(is);
        out.emplace_back(std::move(name), std::move(m));
    }
    return out;
}

inline std::vector<NamedTensor> param_tensors(const ModelParams& p)
{
    std::vector<NamedTensor> t{{"U", p.U}};
    const auto names = p.tensor_names();
    const auto ts = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) t.emplace_back(names[i], *ts[i]);
    return t;
}

// Restores tensors into a model built from `cfg`; shapes must match.
inline ModelParams params_from_tensors(const ModelConfig& cfg, const std::vector<NamedTensor>& tensors)
{
    ModelParams p = init_params(cfg, 0);
    const auto names = p.tensor_names();
    auto slots = p.tensors();
    auto assign = [&](const std::string& name, RealMatrix& dst) {
        for (const auto& [n, m] : tensors)
            if (n == name) {
                if (m.rows() != dst.rows() || m.cols() != dst.cols())
                    throw io_error("checkpoint: shape mismatch for " + name);
                dst = m;
                return;
            }
        throw io_error("checkpoint: missing tensor " + name);
    };
    assign("U", p.U);
    for (std::size_t i = 0; i < slots.size(); ++i) assign(names[i], *slots[i]);
    return p;
}

} // namespace joma::model
