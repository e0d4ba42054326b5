#ifndef PPSTAT_CORE_OPERATORS_HPP
#define PPSTAT_CORE_OPERATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"
#include "ppstat/core/region.hpp"
#include "ppstat/core/rng.hpp"

namespace ppstat {

inline constexpr int max_insertion_attempts = 100;

/// pattern + n i.i.d. uniform points in `region`.
inline PointPattern insert_uniform(const PointPattern& pattern, const Region& region, std::size_t count, const RngSpec& spec)
{
    if (region.dimension() != pattern.dimension()) {
        throw std::invalid_argument("insert_uniform: region dimension differs from pattern dimension");
    }
    if (count == 0) {
        return pattern;
    }
    if (!region.inside(pattern.window())) {
        throw std::invalid_argument("insert_uniform: region is not contained in the window");
    }
    if (region.measure().value <= 0.0) {
        throw std::invalid_argument("insert_uniform: region has zero measure");
    }
    Rng rng(spec);
    std::set<Point> taken(pattern.points().begin(), pattern.points().end());
    std::vector<Point> points(pattern.points().begin(), pattern.points().end());
    for (std::size_t k = 0; k < count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < max_insertion_attempts && !placed; ++attempt) {
            const Point p = region.sample_uniform(rng);
            if (pattern.window().contains(p) && taken.insert(p).second) {
                points.push_back(p);
                placed = true;
            }
        }
        if (!placed) {
            throw ComputeError("insert_uniform: could not place a non-colliding point after 100 attempts");
        }
    }
    return pattern.with_points(std::move(points));
}

namespace selector {

/// Explicit point indices (into the canonical order).
struct Indices {
    std::vector<std::size_t> indices;
};

/// The point closest to the origin 0 under the pattern's metric.
struct NearestToOrigin {};

/// d = 1 only: if the first unit interval [i, i+1), i >= 0, holding any
/// points holds exactly two, the one of those closer to 0; otherwise the
/// closest point left of the origin.
struct FirstIntervalRule {};

} // namespace selector

using PointSelector = std::variant<selector::Indices, selector::NearestToOrigin, selector::FirstIntervalRule>;

/// Indices of the points a selector picks.
inline std::vector<std::size_t> select_points(const PointPattern& pattern, const PointSelector& sel)
{
    const auto pts = pattern.points();
    if (const auto* list = std::get_if<selector::Indices>(&sel)) {
        std::vector<std::size_t> idx = list->indices;
        std::sort(idx.begin(), idx.end());
        if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
            throw std::invalid_argument("delete_points: duplicate index in selector");
        }
        if (!idx.empty() && idx.back() >= pattern.size()) {
            throw std::invalid_argument("delete_points: index out of range");
        }
        return idx;
    }
    if (std::holds_alternative<selector::NearestToOrigin>(sel)) {
        if (pattern.empty()) {
            throw ComputeError("delete_points: nearest-to-origin selector on an empty pattern");
        }
        const Point origin{};
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double d = pattern.metric()(pts[i], origin);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return {best};
    }
    if (pattern.dimension() != 1) {
        throw std::invalid_argument("delete_points: first-interval rule requires d = 1");
    }
    // Points are sorted, so the first point >= 0 opens the first occupied interval.
    const auto first_right = std::lower_bound(pts.begin(), pts.end(), 0.0, [](const Point& p, double v) { return p[0] < v; });
    if (first_right != pts.end()) {
        const double cell = std::floor((*first_right)[0]);
        std::size_t in_cell = 0;
        for (auto it = first_right; it != pts.end() && std::floor((*it)[0]) == cell; ++it) {
            ++in_cell;
        }
        if (in_cell == 2) {
            return {static_cast<std::size_t>(first_right - pts.begin())};
        }
    }
    if (first_right == pts.begin()) {
        throw ComputeError("delete_points: first-interval rule found no point left of the origin");
    }
    return {static_cast<std::size_t>(first_right - pts.begin()) - 1};
}

/// pattern minus the selected points.
inline PointPattern delete_points(const PointPattern& pattern, const PointSelector& sel)
{
    const auto idx = select_points(pattern, sel);
    std::vector<Point> kept;
    kept.reserve(pattern.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (k < idx.size() && idx[k] == i) {
            ++k;
            continue;
        }
        kept.push_back(pattern[i]);
    }
    return pattern.with_points(std::move(kept));
}

/// Points inside `region` (or outside it, when `complement` is set).
inline PointPattern restrict(const PointPattern& pattern, const Region& region, bool complement = false)
{
    if (region.dimension() != pattern.dimension()) {
        throw std::invalid_argument("restrict: region dimension differs from pattern dimension");
    }
    std::vector<Point> kept;
    for (const auto& p : pattern.points()) {
        if (region.contains(p) != complement) {
            kept.push_back(p);
        }
    }
    return pattern.with_points(std::move(kept));
}

/// Union of two patterns on the same window and metric; coincident points are rejected.
inline PointPattern superpose(const PointPattern& a, const PointPattern& b)
{
    if (a.dimension() != b.dimension() || !(a.window() == b.window()) || !(a.metric() == b.metric())) {
        throw std::invalid_argument("superpose: patterns differ in dimension, window or metric");
    }
    std::vector<Point> all(a.points().begin(), a.points().end());
    for (const auto& p : b.points()) {
        if (a.contains_point(p)) {
            throw ComputeError("superpose: coincident point " + a.describe(p) + " in both inputs (result would not be simple)");
        }
        all.push_back(p);
    }
    const Colour label = a.label() == b.label() ? a.label() : Colour::none;
    return PointPattern(a.window(), a.metric(), std::move(all), label);
}

/// Pattern translated by -origin so that `origin` maps to 0.
inline PointPattern recentre(const PointPattern& pattern, const Point& origin)
{
    Point shift;
    for (int i = 0; i < pattern.dimension(); ++i) {
        shift[i] = -origin[i];
    }
    std::vector<Point> moved;
    moved.reserve(pattern.size());
    for (const auto& p : pattern.points()) {
        Point q;
        for (int i = 0; i < pattern.dimension(); ++i) {
            q[i] = p[i] - origin[i];
        }
        moved.push_back(q);
    }
    return PointPattern(pattern.window().translated(shift), pattern.metric(), std::move(moved), pattern.label());
}

} // namespace ppstat

#endif // PPSTAT_CORE_OPERATORS_HPP
