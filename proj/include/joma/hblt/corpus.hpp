#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "joma/core/errors.hpp"
#include "joma/hblt/sampler.hpp"

namespace joma::hblt {

// class<TAB>token,token,...
inline void write_corpus(std::ostream& os, const std::vector<SequenceSample>& samples)
{
    for (const auto& s : samples) {
        os << s.label << '\t';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) os << (i ? "," : "") << s.tokens[i];
        os << '\n';
    }
}

// One 0/1 character per tree node, same line order as the corpus.
inline void write_latents(std::ostream& os, const std::vector<SequenceSample>& samples)
{
    for (const auto& s : samples) {
        for (auto b : s.latents) os << (b ? '1' : '0');
        os << '\n';
    }
}

inline std::vector<SequenceSample> read_corpus(std::istream& is)
{
    std::vector<SequenceSample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw io_error("corpus line " + std::to_string(n) + ": missing tab");
        SequenceSample s;
        try {
            s.label = std::stoi(line.substr(0, tab));
            std::stringstream ss(line.substr(tab + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) s.tokens.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw io_error("corpus line " + std::to_string(n) + ": malformed");
        }
        if (s.tokens.empty()) throw io_error("corpus line " + std::to_string(n) + ": empty sequence");
        out.push_back(std::move(s));
    }
    return out;
}

inline void read_latents(std::istream& is, std::vector<SequenceSample>& samples)
{
    std::string line;
    std::size_t i = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (i >= samples.size()) throw io_error("latent sidecar has more lines than the corpus");
        auto& lat = samples[i++].latents;
        lat.clear();
        for (char c : line) {
            if (c != '0' && c != '1') throw io_error("latent sidecar: expected 0/1");
            lat.push_back(c == '1');
        }
    }
    if (i != samples.size()) throw io_error("latent sidecar has fewer lines than the corpus");
}

} // namespace joma::hblt
