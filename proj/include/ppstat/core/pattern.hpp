#ifndef PPSTAT_CORE_PATTERN_HPP
#define PPSTAT_CORE_PATTERN_HPP

#include <algorithm>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/geometry.hpp"

namespace ppstat {

enum class Colour { none, red, blue };

inline std::string to_string(Colour c)
{
    switch (c) {
    case Colour::red:
        return "red";
    case Colour::blue:
        return "blue";
    case Colour::none:
        break;
    }
    return "none";
}

/// A finite simple point set inside a window, with the metric it is analysed
/// under. Points are kept in lexicographic order so equal sets compare equal.
class PointPattern {
public:
    PointPattern(Window window, Metric metric, std::vector<Point> points = {}, Colour label = Colour::none)
        : window_(std::move(window)), metric_(std::move(metric)), points_(std::move(points)), label_(label)
    {
        if (window_.dimension() != metric_.dimension()) {
            throw std::invalid_argument("point pattern: window and metric dimensions differ");
        }
        if (metric_.kind() == MetricKind::hyperbolic_disc && window_.kind() != WindowKind::disc) {
            throw std::invalid_argument("point pattern: hyperbolic metric requires a disc window");
        }
        const int d = dimension();
        for (auto& p : points_) {
            for (int i = d; i < max_dimension; ++i) {
                p[i] = 0.0;
            }
            if (!window_.contains(p)) {
                throw std::invalid_argument("point pattern: point " + describe(p) + " lies outside the window");
            }
        }
        std::sort(points_.begin(), points_.end());
        const auto dup = std::adjacent_find(points_.begin(), points_.end());
        if (dup != points_.end()) {
            throw std::invalid_argument("point pattern: coincident points at " + describe(*dup) + " (pattern must be simple)");
        }
    }

    [[nodiscard]] int dimension() const noexcept { return window_.dimension(); }
    [[nodiscard]] const Window& window() const noexcept { return window_; }
    [[nodiscard]] const Metric& metric() const noexcept { return metric_; }
    [[nodiscard]] std::span<const Point> points() const noexcept { return points_; }
    [[nodiscard]] const Point& operator[](std::size_t i) const { return points_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] Colour label() const noexcept { return label_; }

    [[nodiscard]] double distance(std::size_t i, std::size_t j) const { return metric_(points_[i], points_[j]); }

    /// Same window, metric and label with a different point set.
    [[nodiscard]] PointPattern with_points(std::vector<Point> points) const
    {
        return PointPattern(window_, metric_, std::move(points), label_);
    }

    [[nodiscard]] PointPattern with_label(Colour label) const
    {
        PointPattern p = *this;
        p.label_ = label;
        return p;
    }

    /// Index of a point with exactly these coordinates, or size() if absent.
    [[nodiscard]] std::size_t find(const Point& p) const noexcept
    {
        const auto it = std::lower_bound(points_.begin(), points_.end(), p);
        if (it != points_.end() && *it == p) {
            return static_cast<std::size_t>(it - points_.begin());
        }
        return points_.size();
    }

    [[nodiscard]] bool contains_point(const Point& p) const noexcept { return find(p) != points_.size(); }

    [[nodiscard]] std::string describe(const Point& p) const
    {
        std::ostringstream os;
        os.precision(17);
        os << '(';
        for (int i = 0; i < dimension(); ++i) {
            os << (i ? "," : "") << p[i];
        }
        os << ')';
        return os.str();
    }

    friend bool operator==(const PointPattern& a, const PointPattern& b)
    {
        return a.window_ == b.window_ && a.metric_ == b.metric_ && a.label_ == b.label_ && a.points_ == b.points_;
    }

private:
    Window window_;
    Metric metric_;
    std::vector<Point> points_;
    Colour label_ = Colour::none;
};

} // namespace ppstat

#endif // PPSTAT_CORE_PATTERN_HPP
