#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"

namespace joma::dyn {

// 17 significant digits, round-trippable.
inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Snapshots of a run: time, flattened state, derived metrics.
template <class State>
struct Trajectory {
    struct Snapshot {
        double t;
        State state;
        std::vector<double> metrics;
    };

    std::vector<std::string> metric_names;
    std::vector<Snapshot> snapshots;

    void push(double t, State s, std::vector<double> metrics = {})
    {
        if (!snapshots.empty() && !(t > snapshots.back().t))
            throw domain_error("Trajectory: time must be strictly increasing");
        if (metrics.size() != metric_names.size()) throw domain_error("Trajectory: metric count mismatch");
        snapshots.push_back({t, std::move(s), std::move(metrics)});
    }

    std::size_t size() const { return snapshots.size(); }
    bool empty() const { return snapshots.empty(); }
    const Snapshot& back() const { return snapshots.back(); }
    const Snapshot& operator[](std::size_t i) const { return snapshots[i]; }
};

// Requires free functions state_columns(const State&) and flatten(const State&).
template <class State>
void write_csv(std::ostream& os, const Trajectory<State>& tr)
{
    if (tr.empty()) throw domain_error("write_csv: empty trajectory");
    os << "t";
    for (const auto& c : state_columns(tr.snapshots.front().state)) os << ',' << c;
    for (const auto& m : tr.metric_names) os << ',' << m;
    os << '\n';
    for (const auto& s : tr.snapshots) {
        os << fmt17(s.t);
        for (double v : flatten(s.state)) os << ',' << fmt17(v);
        for (double v : s.metrics) os << ',' << fmt17(v);
        os << '\n';
    }
}

} // namespace joma::dyn
