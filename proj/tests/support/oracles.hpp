#ifndef PPSTAT_TESTS_ORACLES_HPP
#define PPSTAT_TESTS_ORACLES_HPP

// Slow, direct reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "ppstat/core/pattern.hpp"
#include "ppstat/core/rng.hpp"

namespace oracle {

using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Repeatedly matches the globally closest available pair. Two-colour pairs
/// are (red, blue); one-colour pairs are (smaller, larger). Result is sorted.
inline IndexPairs closest_pair_matching(const ppstat::PointPattern& red, const ppstat::PointPattern* blue,
                                        const ppstat::Metric& metric)
{
    const std::size_t nr = red.size();
    const std::size_t nb = blue ? blue->size() : nr;
    std::vector<char> red_alive(nr, 1);
    std::vector<char> blue_alive(blue ? nb : 0, 1);
    IndexPairs out;
    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        std::size_t bj = 0;
        for (std::size_t i = 0; i < nr; ++i) {
            if (!red_alive[i]) {
                continue;
            }
            if (blue) {
                for (std::size_t j = 0; j < nb; ++j) {
                    if (blue_alive[j] && metric((*blue)[j], red[i]) < best) {
                        best = metric((*blue)[j], red[i]);
                        bi = i;
                        bj = j;
                    }
                }
            } else {
                for (std::size_t j = i + 1; j < nr; ++j) {
                    if (red_alive[j] && metric(red[i], red[j]) < best) {
                        best = metric(red[i], red[j]);
                        bi = i;
                        bj = j;
                    }
                }
            }
        }
        if (std::isinf(best)) {
            break;
        }
        out.emplace_back(bi, bj);
        red_alive[bi] = 0;
        (blue ? blue_alive : red_alive)[bj] = 0;
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Component labels of the graph with edges at distance < 2R, by BFS over
/// all pairs. Labels are numbered in order of first appearance.
inline std::vector<std::size_t> bfs_components(const ppstat::PointPattern& p, double radius)
{
    const std::size_t n = p.size();
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> label(n, none);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != none) {
            continue;
        }
        std::queue<std::size_t> q;
        q.push(s);
        label[s] = next;
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (label[v] == none && std::hypot(p[u][0] - p[v][0], p[u][1] - p[v][1], p[u][2] - p[v][2]) < 2.0 * radius) {
                    label[v] = next;
                    q.push(v);
                }
            }
        }
        ++next;
    }
    return label;
}

/// Relabels ids by order of first appearance so that two labelings of the
/// same partition compare equal.
inline std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& ids)
{
    std::vector<std::size_t> out(ids.size());
    std::vector<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& s) { return s.first == ids[i]; });
        if (it == seen.end()) {
            seen.emplace_back(ids[i], seen.size());
            it = seen.end() - 1;
        }
        out[i] = it->second;
    }
    return out;
}

/// Longest path of distinct points with strictly decreasing consecutive
/// distances, by exhaustive search over the complete graph.
inline std::size_t longest_descending_chain(const ppstat::PointPattern& p)
{
    const std::size_t n = p.size();
    std::vector<char> used(n, 0);
    std::size_t best = std::min<std::size_t>(n, 1);
    std::function<void(std::size_t, double, std::size_t)> extend = [&](std::size_t at, double last, std::size_t len) {
        best = std::max(best, len);
        for (std::size_t v = 0; v < n; ++v) {
            if (!used[v] && p.distance(at, v) < last) {
                used[v] = 1;
                extend(v, p.distance(at, v), len + 1);
                used[v] = 0;
            }
        }
    };
    for (std::size_t s = 0; s < n; ++s) {
        used[s] = 1;
        extend(s, std::numeric_limits<double>::infinity(), 1);
        used[s] = 0;
    }
    return best;
}

/// Composite Simpson rule with n (even) panels.
template <typename F>
double simpson(F&& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) {
        s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    }
    return s * h / 3.0;
}

/// The tent profile written out independently: 1 on [0, 1/2], linear to 0 at 1.
inline double tent(double u)
{
    if (u <= 0.5) {
        return 1.0;
    }
    return u >= 1.0 ? 0.0 : 2.0 - 2.0 * u;
}

/// Integral of h(x / r)^2 over the plane, as 2 pi r^2 int_0^1 h(u)^2 u du.
inline double tent_square_integral_2d(double r)
{
    const double radial = simpson([](double u) { return tent(u) * tent(u) * u; }, 0.0, 1.0, 20000);
    return 2.0 * M_PI * r * r * radial;
}

/// Random points in a box with continuous coordinates, generic position
/// with probability one.
inline std::vector<ppstat::Point> uniform_points(ppstat::Rng& rng, std::size_t n, int dim, double lo, double hi)
{
    std::vector<ppstat::Point> pts(n);
    for (auto& p : pts) {
        for (int i = 0; i < dim; ++i) {
            p[i] = lo + (hi - lo) * rng.uniform();
        }
    }
    return pts;
}

} // namespace oracle

#endif // PPSTAT_TESTS_ORACLES_HPP
