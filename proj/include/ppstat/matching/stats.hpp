#ifndef PPSTAT_MATCHING_STATS_HPP
#define PPSTAT_MATCHING_STATS_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppstat/core/error.hpp"
#include "ppstat/core/io.hpp"
#include "ppstat/matching/stable_match.hpp"

namespace ppstat::matching {

/// Empirical law of the distance from a typical (red) point to its partner.
struct PalmMatchStats {
    int dimension = 0;
    /// Retained matched points, sorted match distances.
    std::vector<double> distances;
    std::size_t unmatched = 0;
    double mean = 0.0;
    double mean_se = 0.0;
    /// E*[X^d].
    double moment_d = 0.0;
    double moment_d_se = 0.0;
    /// (r, P*(X > r)).
    std::vector<std::pair<double, double>> tail;

    [[nodiscard]] std::size_t sample_count() const noexcept { return distances.size(); }

    /// Right-continuous empirical distribution function.
    [[nodiscard]] double cdf(double r) const
    {
        const auto k = std::upper_bound(distances.begin(), distances.end(), r) - distances.begin();
        return static_cast<double>(k) / static_cast<double>(distances.size());
    }

    [[nodiscard]] std::size_t count_at_most(double r) const
    {
        return static_cast<std::size_t>(std::upper_bound(distances.begin(), distances.end(), r) - distances.begin());
    }

    [[nodiscard]] double survival(double r) const { return 1.0 - cdf(r); }
};

/// Geometric grid 2^(k/4) / 4 up to the largest distance.
inline std::vector<double> default_tail_grid(double largest)
{
    std::vector<double> grid;
    for (int k = 0;; ++k) {
        const double r = 0.25 * std::pow(2.0, k / 4.0);
        grid.push_back(r);
        if (r >= largest) {
            break;
        }
    }
    return grid;
}

namespace detail {

inline std::pair<double, double> mean_and_se(const std::vector<double>& v)
{
    const auto n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    const double mean = sum / n;
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline void finish(PalmMatchStats& s, const std::vector<double>& tail_grid)
{
    if (s.distances.empty()) {
        throw ComputeError("match_stats: no matched points remain");
    }
    std::sort(s.distances.begin(), s.distances.end());
    std::tie(s.mean, s.mean_se) = mean_and_se(s.distances);
    std::vector<double> powered(s.distances.size());
    std::transform(s.distances.begin(), s.distances.end(), powered.begin(),
                   [&](double x) { return std::pow(x, s.dimension); });
    std::tie(s.moment_d, s.moment_d_se) = mean_and_se(powered);
    s.tail.clear();
    for (double r : tail_grid.empty() ? default_tail_grid(s.distances.back()) : tail_grid) {
        s.tail.emplace_back(r, s.survival(r));
    }
}

} // namespace detail

/// Statistics over red points. With a Euclidean metric, points closer than
/// boundary_margin to the window boundary are dropped; on a torus none are.
inline PalmMatchStats match_stats(const Matching& m, const PointPattern& red, double boundary_margin,
                                  const std::vector<double>& tail_grid = {})
{
    ppstat::detail::require(boundary_margin >= 0.0, "match_stats: boundary_margin must be non-negative");
    PalmMatchStats s;
    s.dimension = red.dimension();
    const bool trim = m.metric.kind() == MetricKind::euclidean && boundary_margin > 0.0;
    std::size_t retained = 0;
    for (std::size_t i = 0; i < red.size(); ++i) {
        if (trim && red.window().distance_to_boundary(red[i]) < boundary_margin) {
            continue;
        }
        ++retained;
        if (std::isinf(m.red_distance[i])) {
            ++s.unmatched;
        } else {
            s.distances.push_back(m.red_distance[i]);
        }
    }
    if (retained == 0) {
        throw ComputeError("match_stats: every point is excluded by the boundary margin");
    }
    detail::finish(s, tail_grid);
    return s;
}

/// Merges per-replicate statistics into one sample.
inline PalmMatchStats pool_stats(const std::vector<PalmMatchStats>& parts, const std::vector<double>& tail_grid = {})
{
    ppstat::detail::require(!parts.empty(), "pool_stats: nothing to pool");
    PalmMatchStats s;
    s.dimension = parts.front().dimension;
    for (const auto& p : parts) {
        ppstat::detail::require(p.dimension == s.dimension, "pool_stats: dimensions differ");
        s.distances.insert(s.distances.end(), p.distances.begin(), p.distances.end());
        s.unmatched += p.unmatched;
    }
    detail::finish(s, tail_grid);
    return s;
}

inline nlohmann::json matching_to_json(const Matching& m)
{
    nlohmann::json j;
    j["mode"] = to_string(m.mode);
    j["pairs"] = nlohmann::json::array();
    for (const auto& [a, b] : m.pairs) {
        j["pairs"].push_back({a, b});
    }
    if (m.mode == Mode::one_colour) {
        j["unmatched"] = m.unmatched_red;
    } else {
        j["unmatched"] = {{"red", m.unmatched_red}, {"blue", m.unmatched_blue}};
    }
    return j;
}

/// Columns r,F,count at every distinct match distance.
inline std::string cdf_csv(const PalmMatchStats& s)
{
    std::ostringstream os;
    os << "r,F,count\n";
    for (std::size_t k = 0; k < s.distances.size(); ++k) {
        if (k + 1 < s.distances.size() && s.distances[k + 1] == s.distances[k]) {
            continue;
        }
        os << io::format_double(s.distances[k]) << ',' << io::format_double(s.cdf(s.distances[k])) << ',' << k + 1
           << '\n';
    }
    return os.str();
}

inline std::string tail_csv(const PalmMatchStats& s)
{
    std::ostringstream os;
    os << "r,P\n";
    for (const auto& [r, p] : s.tail) {
        os << io::format_double(r) << ',' << io::format_double(p) << '\n';
    }
    return os.str();
}

inline nlohmann::json summary_json(const PalmMatchStats& s)
{
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& [r, p] : s.tail) {
        tail.push_back({r, p});
    }
    return {{"n", s.sample_count()},  {"unmatched", s.unmatched},     {"mean", s.mean},
            {"mean_se", s.mean_se},   {"moment_d", s.moment_d},       {"moment_d_se", s.moment_d_se},
            {"dimension", s.dimension}, {"tail", tail}};
}

} // namespace ppstat::matching

#endif // PPSTAT_MATCHING_STATS_HPP
