#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <deque>
#include <utility>
#include <vector>

#include "json.hpp"

#include "joma/core/errors.hpp"
#include "joma/dynamics/trajectory.hpp"

namespace joma::lab {

using json = nlohmann::json;
using dyn::fmt17;

// Numeric CSV table, 17 significant digits per cell.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row)
    {
        if (row.size() != columns.size()) throw domain_error("Table: row has " + std::to_string(row.size()) +
                                                             " cells, header has " + std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw domain_error("Table: no column " + name);
    }

    std::vector<double> values(const std::string& name) const
    {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }

    std::string header() const
    {
        std::string h;
        for (std::size_t i = 0; i < columns.size(); ++i) h += (i ? "," : "") + columns[i];
        return h;
    }

    std::string csv() const
    {
        std::ostringstream os;
        os << header() << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
            os << '\n';
        }
        return os.str();
    }
};

inline std::vector<std::string> indexed(const std::string& prefix, long n)
{
    std::vector<std::string> out;
    for (long i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// Files produced by one run, in write order.
struct Artifacts {
    std::deque<std::pair<std::string, Table>> tables;         // file name -> table
    std::vector<std::pair<std::string, std::string>> blobs;   // file name -> raw bytes
    json summary = json::object();

    Table& add_table(const std::string& file, std::vector<std::string> columns)
    {
        for (const auto& [name, t] : tables)
            if (name == file) throw domain_error("Artifacts: duplicate table " + file);
        tables.push_back({file, Table{std::move(columns), {}}});
        return tables.back().second;
    }

    const Table& table(const std::string& file) const
    {
        for (const auto& [name, t] : tables)
            if (name == file) return t;
        throw domain_error("Artifacts: no table " + file);
    }
};

} // namespace joma::lab
