#ifndef PPSTAT_MATCHING_CHAINS_HPP
#define PPSTAT_MATCHING_CHAINS_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"

namespace ppstat::matching {

struct ChainOptions {
    /// Neighbours kept per point when the pattern is too big for the full graph.
    std::size_t neighbours = 12;
    std::size_t full_graph_limit = 200;
    std::uint64_t node_budget = 2'000'000;
};

namespace detail {

struct ChainEdge {
    std::size_t to;
    double length;
    /// Points in the longest descending walk starting with this edge.
    std::size_t walk = 2;
};

class ChainSearch {
public:
    ChainSearch(std::vector<std::vector<ChainEdge>> out, std::size_t cap, std::uint64_t budget)
        : out_(std::move(out)), visited_(out_.size(), 0), cap_(cap), budget_(budget)
    {
    }

    std::size_t run()
    {
        const std::size_t n = out_.size();
        best_ = std::min<std::size_t>(n, 1);
        compute_walk_bounds();
        struct Start {
            std::size_t from;
            std::size_t edge;
            std::size_t walk;
        };
        std::vector<Start> starts;
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t e = 0; e < out_[v].size(); ++e) {
                starts.push_back({v, e, out_[v][e].walk});
            }
        }
        std::stable_sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.walk > b.walk; });
        for (const auto& s : starts) {
            if (s.walk <= best_ || best_ >= cap_ || budget_ == 0) {
                break;
            }
            const auto& e = out_[s.from][s.edge];
            visited_[s.from] = 1;
            visited_[e.to] = 1;
            extend(e.to, e.length, 2);
            visited_[e.to] = 0;
            visited_[s.from] = 0;
        }
        return std::min(best_, cap_);
    }

private:
    /// Longest descending walks (points may repeat) bound the simple chains.
    void compute_walk_bounds()
    {
        struct Ref {
            double length;
            std::size_t from;
            std::size_t edge;
        };
        std::vector<Ref> refs;
        for (std::size_t v = 0; v < out_.size(); ++v) {
            for (std::size_t e = 0; e < out_[v].size(); ++e) {
                refs.push_back({out_[v][e].length, v, e});
            }
        }
        std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.length < b.length; });
        std::vector<std::size_t> from_vertex(out_.size(), 1);
        for (std::size_t lo = 0; lo < refs.size();) {
            std::size_t hi = lo;
            while (hi < refs.size() && refs[hi].length == refs[lo].length) {
                auto& e = out_[refs[hi].from][refs[hi].edge];
                e.walk = 1 + from_vertex[e.to];
                ++hi;
            }
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& e = out_[refs[k].from][refs[k].edge];
                from_vertex[refs[k].from] = std::max(from_vertex[refs[k].from], e.walk);
            }
            lo = hi;
        }
        for (auto& edges : out_) {
            std::sort(edges.begin(), edges.end(), [](const ChainEdge& a, const ChainEdge& b) { return a.length > b.length; });
        }
    }

    void extend(std::size_t v, double last, std::size_t count)
    {
        best_ = std::max(best_, count);
        if (best_ >= cap_ || budget_ == 0) {
            return;
        }
        --budget_;
        for (const auto& e : out_[v]) {
            if (!(e.length < last)) {
                continue;
            }
            if (count - 1 + e.walk <= best_ || visited_[e.to]) {
                continue;
            }
            visited_[e.to] = 1;
            extend(e.to, e.length, count + 1);
            visited_[e.to] = 0;
            if (best_ >= cap_ || budget_ == 0) {
                return;
            }
        }
    }

    std::vector<std::vector<ChainEdge>> out_;
    std::vector<char> visited_;
    std::size_t cap_;
    std::uint64_t budget_;
    std::size_t best_ = 0;
};

} // namespace detail

/// Longest chain of distinct points with strictly decreasing consecutive
/// distances that the search finds, capped at max_len. Large patterns use a
/// k-nearest-neighbour graph and a node budget, so the result is a lower
/// bound on the true longest chain.
inline std::size_t check_descending_chain(const PointPattern& pattern, std::size_t max_len,
                                          const ChainOptions& options = {})
{
    ppstat::detail::require(max_len <= 64, "check_descending_chain: max_len must be at most 64");
    const std::size_t n = pattern.size();
    std::vector<std::vector<detail::ChainEdge>> out(n);
    const bool full = n <= options.full_graph_limit;
    std::vector<detail::ChainEdge> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                row.push_back({j, pattern.distance(i, j)});
            }
        }
        if (!full && row.size() > options.neighbours) {
            std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(options.neighbours), row.end(),
                             [](const auto& a, const auto& b) { return a.length < b.length; });
            row.resize(options.neighbours);
        }
        out[i] = row;
    }
    detail::ChainSearch search(std::move(out), max_len, options.node_budget);
    return search.run();
}

} // namespace ppstat::matching

#endif // PPSTAT_MATCHING_CHAINS_HPP
