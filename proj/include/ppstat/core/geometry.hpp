#ifndef PPSTAT_CORE_GEOMETRY_HPP
#define PPSTAT_CORE_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppstat/core/error.hpp"

namespace ppstat {

inline constexpr int max_dimension = 3;

/// A location in R^d, d <= 3. Unused trailing coordinates are zero.
struct Point {
    std::array<double, max_dimension> x{};

    constexpr double& operator[](int i) noexcept { return x[static_cast<std::size_t>(i)]; }
    constexpr double operator[](int i) const noexcept { return x[static_cast<std::size_t>(i)]; }

    friend constexpr auto operator<=>(const Point&, const Point&) = default;
    friend constexpr bool operator==(const Point&, const Point&) = default;
};

inline Point make_point(std::span<const double> coords)
{
    detail::require(!coords.empty() && coords.size() <= max_dimension, "point dimension must be 1..3");
    Point p;
    std::copy(coords.begin(), coords.end(), p.x.begin());
    return p;
}

inline Point make_point(std::initializer_list<double> coords)
{
    return make_point(std::span<const double>(coords.begin(), coords.size()));
}

inline double euclidean_norm(const Point& p, int dim) noexcept
{
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        s += p[i] * p[i];
    }
    return std::sqrt(s);
}

inline double euclidean_distance(const Point& a, const Point& b, int dim) noexcept
{
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double length() const noexcept { return hi - lo; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

enum class WindowKind { box, disc };

/// Finite observation region: an axis-aligned box, or a disc inside the unit
/// disc (hyperbolic model).
class Window {
public:
    static Window box(std::vector<Interval> bounds)
    {
        detail::require(!bounds.empty() && bounds.size() <= max_dimension, "window dimension must be 1..3");
        for (const auto& b : bounds) {
            detail::require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.hi > b.lo,
                            "window bounds must satisfy b_i > a_i");
        }
        Window w;
        w.kind_ = WindowKind::box;
        w.dimension_ = static_cast<int>(bounds.size());
        w.bounds_ = std::move(bounds);
        return w;
    }

    /// The cube [lo, hi]^d.
    static Window cube(int dimension, double lo, double hi)
    {
        return box(std::vector<Interval>(static_cast<std::size_t>(dimension), Interval{lo, hi}));
    }

    static Window disc(Point center, double radius)
    {
        detail::require(radius > 0.0 && radius < 1.0, "disc window radius must lie in (0, 1)");
        detail::require(std::hypot(center[0], center[1]) + radius < 1.0, "disc window must lie inside the unit disc");
        Window w;
        w.kind_ = WindowKind::disc;
        w.dimension_ = 2;
        w.center_ = center;
        w.radius_ = radius;
        w.bounds_ = {{center[0] - radius, center[0] + radius}, {center[1] - radius, center[1] + radius}};
        return w;
    }

    [[nodiscard]] WindowKind kind() const noexcept { return kind_; }
    [[nodiscard]] int dimension() const noexcept { return dimension_; }
    /// Box bounds; for a disc, its bounding box.
    [[nodiscard]] const std::vector<Interval>& bounds() const noexcept { return bounds_; }
    [[nodiscard]] const Interval& bound(int axis) const { return bounds_.at(static_cast<std::size_t>(axis)); }
    [[nodiscard]] double radius() const noexcept { return radius_; }

    [[nodiscard]] Point center() const noexcept
    {
        if (kind_ == WindowKind::disc) {
            return center_;
        }
        Point c;
        for (int i = 0; i < dimension_; ++i) {
            c[i] = 0.5 * (bounds_[static_cast<std::size_t>(i)].lo + bounds_[static_cast<std::size_t>(i)].hi);
        }
        return c;
    }

    [[nodiscard]] bool contains(const Point& p) const noexcept
    {
        if (kind_ == WindowKind::disc) {
            return std::hypot(p[0] - center_[0], p[1] - center_[1]) <= radius_;
        }
        for (int i = 0; i < dimension_; ++i) {
            const auto& b = bounds_[static_cast<std::size_t>(i)];
            if (!(p[i] >= b.lo && p[i] <= b.hi)) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] double volume() const noexcept
    {
        if (kind_ == WindowKind::disc) {
            return M_PI * radius_ * radius_;
        }
        double v = 1.0;
        for (const auto& b : bounds_) {
            v *= b.length();
        }
        return v;
    }

    [[nodiscard]] double diameter() const noexcept
    {
        if (kind_ == WindowKind::disc) {
            return 2.0 * radius_;
        }
        double s = 0.0;
        for (const auto& b : bounds_) {
            s += b.length() * b.length();
        }
        return std::sqrt(s);
    }

    /// Euclidean distance from p to the window boundary (p inside).
    [[nodiscard]] double distance_to_boundary(const Point& p) const noexcept
    {
        if (kind_ == WindowKind::disc) {
            return radius_ - std::hypot(p[0] - center_[0], p[1] - center_[1]);
        }
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dimension_; ++i) {
            const auto& b = bounds_[static_cast<std::size_t>(i)];
            m = std::min({m, p[i] - b.lo, b.hi - p[i]});
        }
        return m;
    }

    /// True when the closed ball B(c, r) lies inside the window.
    [[nodiscard]] bool contains_ball(const Point& c, double r) const noexcept
    {
        return contains(c) && distance_to_boundary(c) >= r;
    }

    [[nodiscard]] Window translated(const Point& offset) const
    {
        if (kind_ == WindowKind::disc) {
            Point c = center_;
            c[0] += offset[0];
            c[1] += offset[1];
            Window w = *this;
            w.center_ = c;
            w.bounds_ = {{c[0] - radius_, c[0] + radius_}, {c[1] - radius_, c[1] + radius_}};
            return w;
        }
        auto b = bounds_;
        for (int i = 0; i < dimension_; ++i) {
            b[static_cast<std::size_t>(i)].lo += offset[i];
            b[static_cast<std::size_t>(i)].hi += offset[i];
        }
        return box(std::move(b));
    }

    friend bool operator==(const Window& a, const Window& b)
    {
        return a.kind_ == b.kind_ && a.dimension_ == b.dimension_ && a.bounds_ == b.bounds_ && a.center_ == b.center_ &&
               a.radius_ == b.radius_;
    }

private:
    Window() = default;

    WindowKind kind_ = WindowKind::box;
    int dimension_ = 0;
    std::vector<Interval> bounds_;
    Point center_{};
    double radius_ = 0.0;
};

enum class MetricKind { euclidean, toroidal, hyperbolic_disc };

inline std::string to_string(MetricKind k)
{
    switch (k) {
    case MetricKind::euclidean:
        return "euclidean";
    case MetricKind::toroidal:
        return "toroidal";
    case MetricKind::hyperbolic_disc:
        return "hyperbolic-disc";
    }
    return "?";
}

/// Distance function on R^d. The toroidal variant carries per-axis periods.
class Metric {
public:
    static Metric euclidean(int dimension)
    {
        detail::require(dimension >= 1 && dimension <= max_dimension, "metric dimension must be 1..3");
        Metric m;
        m.kind_ = MetricKind::euclidean;
        m.dimension_ = dimension;
        return m;
    }

    static Metric toroidal(std::vector<double> periods)
    {
        detail::require(!periods.empty() && periods.size() <= max_dimension, "metric dimension must be 1..3");
        Metric m;
        m.kind_ = MetricKind::toroidal;
        m.dimension_ = static_cast<int>(periods.size());
        for (std::size_t i = 0; i < periods.size(); ++i) {
            detail::require(periods[i] > 0.0 && std::isfinite(periods[i]), "toroidal periods must be positive");
            m.periods_[i] = periods[i];
        }
        return m;
    }

    /// Torus whose periods are the side lengths of a box window.
    static Metric toroidal(const Window& window)
    {
        detail::require(window.kind() == WindowKind::box, "toroidal metric requires a box window");
        std::vector<double> p;
        for (const auto& b : window.bounds()) {
            p.push_back(b.length());
        }
        return toroidal(std::move(p));
    }

    static Metric hyperbolic_disc()
    {
        Metric m;
        m.kind_ = MetricKind::hyperbolic_disc;
        m.dimension_ = 2;
        return m;
    }

    [[nodiscard]] MetricKind kind() const noexcept { return kind_; }
    [[nodiscard]] int dimension() const noexcept { return dimension_; }
    [[nodiscard]] double period(int axis) const noexcept { return periods_[static_cast<std::size_t>(axis)]; }

    /// Unchecked distance for points already known to be valid.
    [[nodiscard]] double operator()(const Point& a, const Point& b) const noexcept
    {
        switch (kind_) {
        case MetricKind::euclidean:
            return euclidean_distance(a, b, dimension_);
        case MetricKind::toroidal: {
            double s = 0.0;
            for (int i = 0; i < dimension_; ++i) {
                const double d = wrapped_delta(a[i] - b[i], periods_[static_cast<std::size_t>(i)]);
                s += d * d;
            }
            return std::sqrt(s);
        }
        case MetricKind::hyperbolic_disc: {
            const std::complex<double> z(a[0], a[1]);
            const std::complex<double> w(b[0], b[1]);
            const double ratio = std::abs(z - w) / std::abs(1.0 - std::conj(w) * z);
            return std::atanh(std::min(ratio, 1.0));
        }
        }
        return 0.0;
    }

    /// Per-axis displacement b - a under this metric (minimum image on a torus).
    [[nodiscard]] double axis_delta(double a, double b, int axis) const noexcept
    {
        const double d = b - a;
        if (kind_ == MetricKind::toroidal) {
            const double p = periods_[static_cast<std::size_t>(axis)];
            double r = std::fmod(d, p);
            if (r > 0.5 * p) {
                r -= p;
            } else if (r < -0.5 * p) {
                r += p;
            }
            return r;
        }
        return d;
    }

    friend bool operator==(const Metric& a, const Metric& b)
    {
        return a.kind_ == b.kind_ && a.dimension_ == b.dimension_ && a.periods_ == b.periods_;
    }

private:
    Metric() = default;

    static double wrapped_delta(double d, double period) noexcept
    {
        double r = std::fabs(std::fmod(d, period));
        return std::min(r, period - r);
    }

    MetricKind kind_ = MetricKind::euclidean;
    int dimension_ = 0;
    std::array<double, max_dimension> periods_{};
};

/// Checked distance between two coordinate vectors.
inline double distance(const Metric& metric, std::span<const double> a, std::span<const double> b)
{
    const auto d = static_cast<std::size_t>(metric.dimension());
    if (a.size() != d || b.size() != d) {
        throw std::invalid_argument("distance: coordinate dimension does not match metric dimension");
    }
    const Point pa = make_point(a);
    const Point pb = make_point(b);
    if (metric.kind() == MetricKind::hyperbolic_disc) {
        if (std::hypot(pa[0], pa[1]) >= 1.0 || std::hypot(pb[0], pb[1]) >= 1.0) {
            throw std::invalid_argument("distance: hyperbolic points must lie strictly inside the unit disc");
        }
    }
    return metric(pa, pb);
}

} // namespace ppstat

#endif // PPSTAT_CORE_GEOMETRY_HPP
