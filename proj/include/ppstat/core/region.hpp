#ifndef PPSTAT_CORE_REGION_HPP
#define PPSTAT_CORE_REGION_HPP

#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/geometry.hpp"
#include "ppstat/core/rng.hpp"

namespace ppstat {

struct BoxShape {
    Point lo;
    Point hi;
};

struct BallShape {
    Point center;
    double radius = 0.0;
};

inline double ball_volume(int dim, double radius)
{
    switch (dim) {
    case 1:
        return 2.0 * radius;
    case 2:
        return M_PI * radius * radius;
    case 3:
        return 4.0 / 3.0 * M_PI * radius * radius * radius;
    default:
        throw std::invalid_argument("ball_volume: dimension must be 1..3");
    }
}

/// Lebesgue measure with an error bound (zero when computed in closed form).
struct Measure {
    double value = 0.0;
    double error = 0.0;
    bool exact = true;
};

/// Finite union of boxes and Euclidean balls in R^d.
class Region {
public:
    using Member = std::variant<BoxShape, BallShape>;

    explicit Region(int dimension) : dimension_(dimension)
    {
        detail::require(dimension >= 1 && dimension <= max_dimension, "region dimension must be 1..3");
    }

    static Region from_window(const Window& w)
    {
        Region r(w.dimension());
        if (w.kind() == WindowKind::disc) {
            r.add_ball(w.center(), w.radius());
        } else {
            Point lo, hi;
            for (int i = 0; i < w.dimension(); ++i) {
                lo[i] = w.bound(i).lo;
                hi[i] = w.bound(i).hi;
            }
            r.add_box(lo, hi);
        }
        return r;
    }

    Region& add_box(const Point& lo, const Point& hi)
    {
        for (int i = 0; i < dimension_; ++i) {
            detail::require(hi[i] > lo[i], "region box must have hi > lo on every axis");
        }
        members_.emplace_back(BoxShape{lo, hi});
        return *this;
    }

    Region& add_ball(const Point& center, double radius)
    {
        detail::require(radius > 0.0 && std::isfinite(radius), "region ball radius must be positive");
        members_.emplace_back(BallShape{center, radius});
        return *this;
    }

    [[nodiscard]] int dimension() const noexcept { return dimension_; }
    [[nodiscard]] const std::vector<Member>& members() const noexcept { return members_; }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }

    [[nodiscard]] bool contains(const Point& p) const noexcept
    {
        for (const auto& m : members_) {
            if (member_contains(m, p)) {
                return true;
            }
        }
        return false;
    }

    /// Closed-form sum when members are pairwise disjoint; otherwise a
    /// randomly shifted Halton estimate whose error is the standard error
    /// across shifts.
    [[nodiscard]] Measure measure() const
    {
        if (members_.empty()) {
            return {};
        }
        if (pairwise_disjoint()) {
            double v = 0.0;
            for (const auto& m : members_) {
                v += member_volume(m);
            }
            return {v, 0.0, true};
        }
        return quasi_monte_carlo_measure();
    }

    /// Whether the whole region lies inside the window.
    [[nodiscard]] bool inside(const Window& w) const
    {
        for (const auto& m : members_) {
            if (const auto* b = std::get_if<BoxShape>(&m)) {
                if (w.kind() == WindowKind::box) {
                    for (int i = 0; i < dimension_; ++i) {
                        if (b->lo[i] < w.bound(i).lo || b->hi[i] > w.bound(i).hi) {
                            return false;
                        }
                    }
                } else {
                    for (int corner = 0; corner < (1 << dimension_); ++corner) {
                        Point c;
                        for (int i = 0; i < dimension_; ++i) {
                            c[i] = (corner >> i) & 1 ? b->hi[i] : b->lo[i];
                        }
                        if (!w.contains(c)) {
                            return false;
                        }
                    }
                }
            } else {
                const auto& ball = std::get<BallShape>(m);
                if (!w.contains_ball(ball.center, ball.radius)) {
                    return false;
                }
            }
        }
        return true;
    }

    /// Uniform point in the union: pick a member proportionally to its
    /// volume, sample inside it, and accept with probability 1/(number of
    /// members covering the point).
    template <typename R>
    Point sample_uniform(R& rng) const
    {
        detail::require(!members_.empty(), "cannot sample from an empty region");
        std::vector<double> cumulative;
        cumulative.reserve(members_.size());
        double total = 0.0;
        for (const auto& m : members_) {
            total += member_volume(m);
            cumulative.push_back(total);
        }
        for (;;) {
            const double u = rng.uniform() * total;
            const auto k = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
            const auto& m = members_[std::min(k, members_.size() - 1)];
            const Point p = sample_member(m, rng);
            int covering = 0;
            for (const auto& other : members_) {
                covering += member_contains(other, p) ? 1 : 0;
            }
            if (covering <= 1 || rng.uniform() * covering < 1.0) {
                return p;
            }
        }
    }

private:
    [[nodiscard]] bool member_contains(const Member& m, const Point& p) const noexcept
    {
        if (const auto* b = std::get_if<BoxShape>(&m)) {
            for (int i = 0; i < dimension_; ++i) {
                if (p[i] < b->lo[i] || p[i] > b->hi[i]) {
                    return false;
                }
            }
            return true;
        }
        const auto& ball = std::get<BallShape>(m);
        return euclidean_distance(p, ball.center, dimension_) < ball.radius;
    }

    [[nodiscard]] double member_volume(const Member& m) const
    {
        if (const auto* b = std::get_if<BoxShape>(&m)) {
            double v = 1.0;
            for (int i = 0; i < dimension_; ++i) {
                v *= b->hi[i] - b->lo[i];
            }
            return v;
        }
        return ball_volume(dimension_, std::get<BallShape>(m).radius);
    }

    template <typename R>
    Point sample_member(const Member& m, R& rng) const
    {
        Point p;
        if (const auto* b = std::get_if<BoxShape>(&m)) {
            for (int i = 0; i < dimension_; ++i) {
                p[i] = rng.uniform(b->lo[i], b->hi[i]);
            }
            return p;
        }
        const auto& ball = std::get<BallShape>(m);
        for (;;) {
            Point q;
            double s = 0.0;
            for (int i = 0; i < dimension_; ++i) {
                q[i] = rng.uniform(-1.0, 1.0);
                s += q[i] * q[i];
            }
            if (s < 1.0) {
                for (int i = 0; i < dimension_; ++i) {
                    p[i] = ball.center[i] + ball.radius * q[i];
                }
                return p;
            }
        }
    }

    [[nodiscard]] BoxShape member_bounds(const Member& m) const
    {
        if (const auto* b = std::get_if<BoxShape>(&m)) {
            return *b;
        }
        const auto& ball = std::get<BallShape>(m);
        BoxShape box;
        for (int i = 0; i < dimension_; ++i) {
            box.lo[i] = ball.center[i] - ball.radius;
            box.hi[i] = ball.center[i] + ball.radius;
        }
        return box;
    }

    [[nodiscard]] bool overlap(const Member& a, const Member& b) const
    {
        const auto* ba = std::get_if<BoxShape>(&a);
        const auto* bb = std::get_if<BoxShape>(&b);
        if (ba && bb) {
            for (int i = 0; i < dimension_; ++i) {
                if (std::min(ba->hi[i], bb->hi[i]) <= std::max(ba->lo[i], bb->lo[i])) {
                    return false;
                }
            }
            return true;
        }
        if (!ba && !bb) {
            const auto& x = std::get<BallShape>(a);
            const auto& y = std::get<BallShape>(b);
            return euclidean_distance(x.center, y.center, dimension_) < x.radius + y.radius;
        }
        const BoxShape& box = ba ? *ba : *bb;
        const BallShape& ball = ba ? std::get<BallShape>(b) : std::get<BallShape>(a);
        double s = 0.0;
        for (int i = 0; i < dimension_; ++i) {
            const double c = std::clamp(ball.center[i], box.lo[i], box.hi[i]);
            s += (c - ball.center[i]) * (c - ball.center[i]);
        }
        return std::sqrt(s) < ball.radius;
    }

    [[nodiscard]] bool pairwise_disjoint() const
    {
        for (std::size_t i = 0; i < members_.size(); ++i) {
            for (std::size_t j = i + 1; j < members_.size(); ++j) {
                if (overlap(members_[i], members_[j])) {
                    return false;
                }
            }
        }
        return true;
    }

    [[nodiscard]] Measure quasi_monte_carlo_measure() const
    {
        BoxShape hull = member_bounds(members_.front());
        for (const auto& m : members_) {
            const BoxShape b = member_bounds(m);
            for (int i = 0; i < dimension_; ++i) {
                hull.lo[i] = std::min(hull.lo[i], b.lo[i]);
                hull.hi[i] = std::max(hull.hi[i], b.hi[i]);
            }
        }
        double hull_volume = 1.0;
        for (int i = 0; i < dimension_; ++i) {
            hull_volume *= hull.hi[i] - hull.lo[i];
        }
        constexpr int shifts = 16;
        constexpr int points_per_shift = 1 << 14;
        constexpr std::array<int, 3> bases{2, 3, 5};
        Rng rng(RngSpec{0x5eed, 0x9e0});
        std::vector<double> estimates;
        for (int s = 0; s < shifts; ++s) {
            std::array<double, 3> shift{};
            for (int i = 0; i < dimension_; ++i) {
                shift[static_cast<std::size_t>(i)] = rng.uniform();
            }
            int hits = 0;
            for (int k = 1; k <= points_per_shift; ++k) {
                Point p;
                for (int i = 0; i < dimension_; ++i) {
                    double u = radical_inverse(k, bases[static_cast<std::size_t>(i)]) + shift[static_cast<std::size_t>(i)];
                    u -= std::floor(u);
                    p[i] = hull.lo[i] + u * (hull.hi[i] - hull.lo[i]);
                }
                hits += contains(p) ? 1 : 0;
            }
            estimates.push_back(hull_volume * hits / points_per_shift);
        }
        const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / shifts;
        double ss = 0.0;
        for (double e : estimates) {
            ss += (e - mean) * (e - mean);
        }
        return {mean, std::sqrt(ss / (shifts - 1) / shifts), false};
    }

    static double radical_inverse(int k, int base) noexcept
    {
        double inv = 1.0 / base;
        double f = inv;
        double r = 0.0;
        while (k > 0) {
            r += f * (k % base);
            k /= base;
            f *= inv;
        }
        return r;
    }

    int dimension_;
    std::vector<Member> members_;
};

} // namespace ppstat

#endif // PPSTAT_CORE_REGION_HPP
