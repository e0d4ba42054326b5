#ifndef PPSTAT_MATCHING_STABLE_MATCH_HPP
#define PPSTAT_MATCHING_STABLE_MATCH_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"
#include "ppstat/matching/spatial_index.hpp"

namespace ppstat::matching {

enum class Mode { one_colour, two_colour };

inline const char* to_string(Mode m) { return m == Mode::one_colour ? "one-colour" : "two-colour"; }

/// Relative gap below which two candidate distances count as a tie.
inline constexpr double tie_tolerance = 1e-9;

inline constexpr std::size_t unmatched_index = std::numeric_limits<std::size_t>::max();

/// Pairs index into the red pattern and, in two-colour mode, the blue one.
/// One-colour pairs are stored with first < second.
struct Matching {
    Mode mode = Mode::one_colour;
    Metric metric = Metric::euclidean(1);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> unmatched_red;
    std::vector<std::size_t> unmatched_blue;
    /// Partner of each red (and blue) point, or `unmatched_index`.
    std::vector<std::size_t> red_partner;
    std::vector<std::size_t> blue_partner;
    /// Match distance of each red (and blue) point; infinity when unmatched.
    std::vector<double> red_distance;
    std::vector<double> blue_distance;

    [[nodiscard]] bool operator==(const Matching&) const = default;
};

namespace detail {

struct Candidate {
    double distance;
    std::size_t from;
    std::size_t to;
    std::uint64_t version;

    bool operator>(const Candidate& o) const
    {
        if (distance != o.distance) {
            return distance > o.distance;
        }
        return from > o.from;
    }
};

inline void check_inputs(const PointPattern& red, const PointPattern* blue, const Metric& metric)
{
    if (red.dimension() != metric.dimension()) {
        throw std::invalid_argument("stable_match: pattern dimension does not match the metric");
    }
    if (blue != nullptr && blue->dimension() != red.dimension()) {
        throw std::invalid_argument("stable_match: red and blue patterns have different dimensions");
    }
    if (metric.kind() == MetricKind::toroidal && red.window().kind() != WindowKind::box) {
        throw std::invalid_argument("stable_match: a toroidal metric needs a box window");
    }
    if (metric.kind() == MetricKind::hyperbolic_disc && red.window().kind() != WindowKind::disc) {
        throw std::invalid_argument("stable_match: the hyperbolic metric needs a disc window");
    }
}

inline Neighbours checked_nearest(const SpatialIndex& index, const Point& q, std::size_t exclude,
                                  const PointPattern& where)
{
    constexpr double slack = 1.0 + tie_tolerance;
    auto nb = index.nearest(q, exclude, slack);
    if (nb.second != Neighbours::none && nb.second_distance <= nb.nearest_distance * slack) {
        throw TieError("stable_match: equidistant candidates for the point at " + where.describe(q) + " (distances " +
                       std::to_string(nb.nearest_distance) + " and " + std::to_string(nb.second_distance) +
                       "); the input is not non-equidistant");
    }
    return nb;
}

} // namespace detail

/// Unique stable partial matching, built by repeatedly matching and removing
/// mutually closest pairs. With `blue` absent this is the one-colour scheme.
/// Throws TieError when some point sees two candidates within relative 1e-9
/// while its partner is being decided.
inline Matching stable_match(const PointPattern& red, const PointPattern* blue, const Metric& metric)
{
    detail::check_inputs(red, blue, metric);
    const bool two = blue != nullptr;
    Matching m;
    m.mode = two ? Mode::two_colour : Mode::one_colour;
    m.metric = metric;
    const std::size_t nr = red.size();
    const std::size_t nb = two ? blue->size() : 0;
    m.red_partner.assign(nr, unmatched_index);
    m.red_distance.assign(nr, std::numeric_limits<double>::infinity());
    m.blue_partner.assign(nb, unmatched_index);
    m.blue_distance.assign(nb, std::numeric_limits<double>::infinity());

    const std::vector<Point> red_points(red.points().begin(), red.points().end());
    SpatialIndex red_index(red.window(), metric, red_points);
    std::optional<SpatialIndex> blue_index;
    if (two) {
        blue_index.emplace(blue->window(), metric, std::vector<Point>(blue->points().begin(), blue->points().end()));
    }

    // Node k < nr is red point k; node nr + j is blue point j.
    const std::size_t total = nr + nb;
    std::vector<std::uint64_t> version(total, 0);
    std::priority_queue<detail::Candidate, std::vector<detail::Candidate>, std::greater<>> heap;

    auto own_index = [&](std::size_t node) -> SpatialIndex& { return node < nr ? red_index : *blue_index; };
    auto other_index = [&](std::size_t node) -> SpatialIndex& {
        if (!two) {
            return red_index;
        }
        return node < nr ? *blue_index : red_index;
    };
    auto position = [&](std::size_t node) -> const Point& {
        return node < nr ? red_points[node] : blue_index->point(node - nr);
    };
    auto local = [&](std::size_t node) { return node < nr ? node : node - nr; };
    auto to_node = [&](std::size_t from, std::size_t k) { return (two && from < nr) ? nr + k : k; };

    auto query = [&](std::size_t node) {
        const std::size_t exclude = two ? Neighbours::none : node;
        const auto found = detail::checked_nearest(other_index(node), position(node), exclude, red);
        ++version[node];
        if (found.found()) {
            heap.push({found.nearest_distance, node, to_node(node, found.nearest), version[node]});
        }
    };

    for (std::size_t node = 0; node < total; ++node) {
        query(node);
    }
    while (!heap.empty()) {
        const auto top = heap.top();
        heap.pop();
        if (!own_index(top.from).alive(local(top.from)) || top.version != version[top.from]) {
            continue;
        }
        if (!own_index(top.to).alive(local(top.to))) {
            query(top.from);
            continue;
        }
        // Every live node's heap key is at most its true nearest distance, so
        // top.to has no candidate closer than top.from. Confirm, tie-checked.
        const std::size_t back_exclude = two ? Neighbours::none : top.to;
        const auto back = detail::checked_nearest(other_index(top.to), position(top.to), back_exclude, red);
        if (to_node(top.to, back.nearest) != top.from) {
            throw ComputeError("stable_match: internal inconsistency, nearest-neighbour keys out of order");
        }
        own_index(top.from).remove(local(top.from));
        own_index(top.to).remove(local(top.to));
        ++version[top.from];
        ++version[top.to];
        const std::size_t a = top.from < nr ? top.from : top.to;
        const std::size_t b = top.from < nr ? top.to : top.from;
        if (two) {
            const std::size_t rb = b - nr;
            m.pairs.emplace_back(a, rb);
            m.red_partner[a] = rb;
            m.blue_partner[rb] = a;
            m.red_distance[a] = top.distance;
            m.blue_distance[rb] = top.distance;
        } else {
            m.pairs.emplace_back(std::min(a, b), std::max(a, b));
            m.red_partner[a] = b;
            m.red_partner[b] = a;
            m.red_distance[a] = top.distance;
            m.red_distance[b] = top.distance;
        }
    }
    std::sort(m.pairs.begin(), m.pairs.end());
    for (std::size_t k = 0; k < nr; ++k) {
        if (m.red_partner[k] == unmatched_index) {
            m.unmatched_red.push_back(k);
        }
    }
    for (std::size_t k = 0; k < nb; ++k) {
        if (m.blue_partner[k] == unmatched_index) {
            m.unmatched_blue.push_back(k);
        }
    }
    return m;
}

inline Matching stable_match(const PointPattern& red, const Metric& metric) { return stable_match(red, nullptr, metric); }

inline Matching stable_match(const PointPattern& red, const PointPattern& blue, const Metric& metric)
{
    return stable_match(red, &blue, metric);
}

struct StabilityReport {
    bool stable = true;
    /// First violating pair (red index, blue or red index).
    std::optional<std::pair<std::size_t, std::size_t>> violation;
};

/// Exhaustive scan for a pair that strictly prefers each other to their
/// partners, unmatched points preferring anyone.
inline StabilityReport verify_stability(const Matching& m, const PointPattern& red, const PointPattern* blue = nullptr)
{
    StabilityReport report;
    const bool two = m.mode == Mode::two_colour;
    if (two && blue == nullptr) {
        throw std::invalid_argument("verify_stability: two-colour matching needs the blue pattern");
    }
    const PointPattern& other = two ? *blue : red;
    const auto& other_distance = two ? m.blue_distance : m.red_distance;
    for (std::size_t i = 0; i < red.size(); ++i) {
        for (std::size_t j = two ? 0 : i + 1; j < other.size(); ++j) {
            const double d = m.metric(red[i], other[j]);
            if (d < m.red_distance[i] && d < other_distance[j]) {
                report.stable = false;
                report.violation = std::make_pair(i, j);
                return report;
            }
        }
    }
    return report;
}

/// True iff all distinct pair distances differ by a relative margin above tol.
inline bool check_non_equidistant(const PointPattern& pattern, double tol = tie_tolerance)
{
    std::vector<double> d;
    const std::size_t n = pattern.size();
    d.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d.push_back(pattern.distance(i, j));
        }
    }
    std::sort(d.begin(), d.end());
    for (std::size_t k = 1; k < d.size(); ++k) {
        if (d[k] - d[k - 1] <= tol * d[k]) {
            return false;
        }
    }
    return true;
}

/// Points of `red` whose match distance exceeds dist(x, center) - epsilon.
/// Unmatched points always qualify.
inline std::vector<std::size_t> compute_H(const PointPattern& red, const Matching& m, double epsilon, const Point& center)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < red.size(); ++i) {
        if (m.red_distance[i] > m.metric(red[i], center) - epsilon) {
            out.push_back(i);
        }
    }
    return out;
}

/// Points of `red` other than y that prefer location y to their partner.
inline std::vector<std::size_t> compute_N(const PointPattern& red, const Matching& m, const Point& y)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < red.size(); ++i) {
        if (red[i] == y) {
            continue;
        }
        if (m.red_distance[i] > m.metric(red[i], y)) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace ppstat::matching

#endif // PPSTAT_MATCHING_STABLE_MATCH_HPP
