#ifndef PPSTAT_MATCHING_SPATIAL_INDEX_HPP
#define PPSTAT_MATCHING_SPATIAL_INDEX_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/geometry.hpp"

namespace ppstat::matching {

/// Nearest and runner-up candidates from one query.
struct Neighbours {
    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    std::size_t nearest = none;
    double nearest_distance = std::numeric_limits<double>::infinity();
    std::size_t second = none;
    double second_distance = std::numeric_limits<double>::infinity();

    void offer(std::size_t k, double dist)
    {
        if (dist < nearest_distance) {
            second = nearest;
            second_distance = nearest_distance;
            nearest = k;
            nearest_distance = dist;
        } else if (dist < second_distance) {
            second = k;
            second_distance = dist;
        }
    }

    [[nodiscard]] bool found() const noexcept { return nearest != none; }
};

/// Uniform grid over a box window (periodic on a torus) holding a shrinking
/// set of points. Queries expand in Chebyshev rings until the remaining cells
/// cannot beat `best * slack`. The hyperbolic metric falls back to a scan.
class SpatialIndex {
public:
    SpatialIndex(const Window& window, const Metric& metric, std::vector<Point> points)
        : window_(window), metric_(metric), points_(std::move(points)), alive_(points_.size(), 1),
          alive_count_(points_.size())
    {
        brute_ = metric_.kind() == MetricKind::hyperbolic_disc;
        rebuild();
    }

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] std::size_t alive_count() const noexcept { return alive_count_; }
    [[nodiscard]] bool alive(std::size_t k) const noexcept { return alive_[k] != 0; }
    [[nodiscard]] const Point& point(std::size_t k) const noexcept { return points_[k]; }

    void remove(std::size_t k)
    {
        if (!alive_[k]) {
            return;
        }
        alive_[k] = 0;
        --alive_count_;
        auto& cell = cells_[cell_of_[k]];
        const auto it = std::find(cell.begin(), cell.end(), k);
        *it = cell.back();
        cell.pop_back();
        if (!brute_ && alive_count_ > 0 && alive_count_ * 4 < built_count_) {
            rebuild();
        }
    }

    /// Nearest alive points to q, skipping index `exclude`. All candidates
    /// within `slack` of the nearest distance are guaranteed to be seen.
    [[nodiscard]] Neighbours nearest(const Point& q, std::size_t exclude, double slack) const
    {
        Neighbours nb;
        if (alive_count_ == 0) {
            return nb;
        }
        const auto home = cell_coords(q);
        for (std::int64_t r = 0;; ++r) {
            bool any = false;
            std::array<std::int64_t, 3> offset{};
            visit_ring(0, r, false, home, offset, any, [&](std::size_t cell) {
                for (const std::size_t k : cells_[cell]) {
                    if (k != exclude) {
                        nb.offer(k, metric_(q, points_[k]));
                    }
                }
            });
            if (!any) {
                break;
            }
            const double reach = static_cast<double>(r) * min_side_;
            if (nb.found() && reach > nb.nearest_distance * slack) {
                break;
            }
        }
        return nb;
    }

private:
    void rebuild()
    {
        const int dim = metric_.dimension();
        built_count_ = alive_count_;
        cells_.clear();
        cell_of_.assign(points_.size(), 0);
        if (brute_) {
            counts_ = {1, 1, 1};
            lo_ = {0.0, 0.0, 0.0};
            side_ = {1.0, 1.0, 1.0};
            min_side_ = std::numeric_limits<double>::infinity();
            cells_.assign(1, {});
            for (std::size_t k = 0; k < points_.size(); ++k) {
                if (alive_[k]) {
                    cells_[0].push_back(k);
                }
            }
            return;
        }
        const double volume = window_.volume();
        const double target = std::pow(volume / static_cast<double>(std::max<std::size_t>(alive_count_, 1)),
                                        1.0 / static_cast<double>(dim));
        std::size_t total = 1;
        min_side_ = std::numeric_limits<double>::infinity();
        counts_ = {1, 1, 1};
        for (int i = 0; i < dim; ++i) {
            const auto ax = static_cast<std::size_t>(i);
            const Interval b = window_.kind() == WindowKind::box
                                   ? window_.bound(i)
                                   : Interval{window_.center()[i] - window_.radius(), window_.center()[i] + window_.radius()};
            const double len = metric_.kind() == MetricKind::toroidal ? metric_.period(i) : b.length();
            auto k = static_cast<std::int64_t>(std::floor(len / target));
            k = std::clamp<std::int64_t>(k, 1, 1 << 12);
            counts_[ax] = k;
            lo_[ax] = b.lo;
            side_[ax] = len / static_cast<double>(k);
            min_side_ = std::min(min_side_, side_[ax]);
            total *= static_cast<std::size_t>(k);
        }
        cells_.assign(total, {});
        for (std::size_t k = 0; k < points_.size(); ++k) {
            if (alive_[k]) {
                const auto c = cell_index(cell_coords(points_[k]));
                cell_of_[k] = c;
                cells_[c].push_back(k);
            }
        }
    }

    [[nodiscard]] std::array<std::int64_t, 3> cell_coords(const Point& p) const
    {
        std::array<std::int64_t, 3> c{};
        if (brute_) {
            return c;
        }
        for (int i = 0; i < metric_.dimension(); ++i) {
            const auto ax = static_cast<std::size_t>(i);
            auto k = static_cast<std::int64_t>(std::floor((p[i] - lo_[ax]) / side_[ax]));
            if (metric_.kind() == MetricKind::toroidal) {
                k %= counts_[ax];
                if (k < 0) {
                    k += counts_[ax];
                }
            }
            c[ax] = std::clamp<std::int64_t>(k, 0, counts_[ax] - 1);
        }
        return c;
    }

    [[nodiscard]] std::size_t cell_index(const std::array<std::int64_t, 3>& c) const
    {
        return static_cast<std::size_t>((c[0] * counts_[1] + c[1]) * counts_[2] + c[2]);
    }

    /// Cells at Chebyshev offset exactly r from `home`, each visited once
    /// even when the ring wraps around a small periodic grid.
    template <typename Fn>
    void visit_ring(int axis, std::int64_t r, bool on_ring, const std::array<std::int64_t, 3>& home,
                    std::array<std::int64_t, 3>& offset, bool& any, Fn&& fn) const
    {
        const int dim = brute_ ? 1 : metric_.dimension();
        if (axis == dim) {
            if (!on_ring && r > 0) {
                return;
            }
            std::array<std::int64_t, 3> c{};
            for (int i = 0; i < dim; ++i) {
                const auto ax = static_cast<std::size_t>(i);
                std::int64_t k = home[ax] + offset[ax];
                if (metric_.kind() == MetricKind::toroidal) {
                    k = ((k % counts_[ax]) + counts_[ax]) % counts_[ax];
                }
                c[ax] = k;
            }
            any = true;
            fn(brute_ ? std::size_t{0} : cell_index(c));
            return;
        }
        const auto ax = static_cast<std::size_t>(axis);
        std::int64_t lo = -r;
        std::int64_t hi = r;
        if (metric_.kind() == MetricKind::toroidal) {
            const std::int64_t down = (counts_[ax] - 1) / 2;
            lo = std::max(lo, -down);
            hi = std::min(hi, counts_[ax] - 1 - down);
        } else {
            lo = std::max(lo, -home[ax]);
            hi = std::min(hi, counts_[ax] - 1 - home[ax]);
        }
        const bool last = axis + 1 == dim;
        for (std::int64_t o = lo; o <= hi; ++o) {
            const bool edge = o == -r || o == r;
            if (last && !on_ring && !edge && r > 0) {
                continue;
            }
            offset[ax] = o;
            visit_ring(axis + 1, r, on_ring || edge, home, offset, any, fn);
        }
        offset[ax] = 0;
    }

    Window window_;
    Metric metric_;
    std::vector<Point> points_;
    std::vector<char> alive_;
    std::size_t alive_count_ = 0;
    std::size_t built_count_ = 0;
    bool brute_ = false;
    std::array<std::int64_t, 3> counts_{1, 1, 1};
    std::array<double, 3> lo_{};
    std::array<double, 3> side_{1.0, 1.0, 1.0};
    double min_side_ = 1.0;
    std::vector<std::vector<std::size_t>> cells_;
    std::vector<std::size_t> cell_of_;
};

} // namespace ppstat::matching

#endif // PPSTAT_MATCHING_SPATIAL_INDEX_HPP
