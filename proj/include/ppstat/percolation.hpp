#ifndef PPSTAT_PERCOLATION_HPP
#define PPSTAT_PERCOLATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"

namespace ppstat::percolation {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

struct Cluster {
    std::size_t size = 0;
    Point lo;
    Point hi;
    /// Face 2i is the lower side of axis i, 2i + 1 the upper side.
    std::array<bool, 6> touches{};
};

/// Connected components of the union of open balls B(x, R).
struct ClusterLabels {
    double radius = 0.0;
    int dimension = 0;
    /// Cluster id of each point; ids are numbered by first member.
    std::vector<std::size_t> id;
    std::vector<Cluster> clusters;

    [[nodiscard]] std::size_t cluster_count() const noexcept { return clusters.size(); }
};

namespace detail {

/// Points bucketed into cubes of side 2R; only neighbouring cubes can hold
/// points closer than 2R.
class CellHash {
public:
    CellHash(std::span<const Point> points, int dim, double side) : dim_(dim), side_(side)
    {
        for (std::size_t k = 0; k < points.size(); ++k) {
            cells_[key(coords(points[k]))].push_back(k);
        }
    }

    template <typename Fn>
    void for_each_near(const Point& p, Fn&& fn) const
    {
        const auto c = coords(p);
        std::array<std::int64_t, 3> o{};
        const std::int64_t span_y = dim_ >= 2 ? 1 : 0;
        const std::int64_t span_z = dim_ >= 3 ? 1 : 0;
        for (o[0] = -1; o[0] <= 1; ++o[0]) {
            for (o[1] = -span_y; o[1] <= span_y; ++o[1]) {
                for (o[2] = -span_z; o[2] <= span_z; ++o[2]) {
                    const auto it = cells_.find(key({c[0] + o[0], c[1] + o[1], c[2] + o[2]}));
                    if (it == cells_.end()) {
                        continue;
                    }
                    for (const std::size_t k : it->second) {
                        fn(k);
                    }
                }
            }
        }
    }

private:
    [[nodiscard]] std::array<std::int64_t, 3> coords(const Point& p) const
    {
        std::array<std::int64_t, 3> c{};
        for (int i = 0; i < dim_; ++i) {
            c[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(p[i] / side_));
        }
        return c;
    }

    static std::uint64_t key(const std::array<std::int64_t, 3>& c)
    {
        std::uint64_t h = 0;
        for (const auto v : c) {
            h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(v) + 0x632BE59BD9B4E019ULL;
            h ^= h >> 29;
        }
        return h;
    }

    int dim_;
    double side_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

inline void require_euclidean_box(const PointPattern& pattern, const char* what)
{
    if (pattern.metric().kind() != MetricKind::euclidean) {
        throw std::invalid_argument(std::string(what) + ": the Boolean model needs a Euclidean metric");
    }
    if (pattern.window().kind() != WindowKind::box) {
        throw std::invalid_argument(std::string(what) + ": the Boolean model needs a box window");
    }
}

/// Components of the subgraph on `members` with edges at distance < 2R.
inline std::vector<std::vector<std::size_t>> components(const PointPattern& pattern, const std::vector<std::size_t>& members,
                                                        double radius)
{
    std::vector<Point> pts;
    pts.reserve(members.size());
    for (const auto k : members) {
        pts.push_back(pattern[k]);
    }
    DisjointSet ds(pts.size());
    CellHash hash(pts, pattern.dimension(), 2.0 * radius);
    const double reach = 2.0 * radius;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        hash.for_each_near(pts[i], [&](std::size_t j) {
            if (j > i && euclidean_distance(pts[i], pts[j], pattern.dimension()) < reach) {
                ds.unite(i, j);
            }
        });
    }
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> slot(pts.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto root = ds.find(i);
        if (slot[root] == std::numeric_limits<std::size_t>::max()) {
            slot[root] = out.size();
            out.emplace_back();
        }
        out[slot[root]].push_back(members[i]);
    }
    return out;
}

inline bool touches_boundary(const PointPattern& pattern, std::size_t k, double radius)
{
    const Point& p = pattern[k];
    for (int i = 0; i < pattern.dimension(); ++i) {
        const auto& b = pattern.window().bound(i);
        if (p[i] - b.lo < radius || b.hi - p[i] < radius) {
            return true;
        }
    }
    return false;
}

} // namespace detail

inline ClusterLabels build_boolean_model(const PointPattern& pattern, double radius)
{
    if (!(radius > 0.0)) {
        throw std::invalid_argument("build_boolean_model: R must be positive");
    }
    detail::require_euclidean_box(pattern, "build_boolean_model");
    std::vector<std::size_t> all(pattern.size());
    std::iota(all.begin(), all.end(), 0);
    const auto parts = detail::components(pattern, all, radius);

    ClusterLabels labels;
    labels.radius = radius;
    labels.dimension = pattern.dimension();
    labels.id.assign(pattern.size(), 0);
    labels.clusters.resize(parts.size());
    const int dim = pattern.dimension();
    for (std::size_t c = 0; c < parts.size(); ++c) {
        auto& cl = labels.clusters[c];
        cl.size = parts[c].size();
        cl.lo = pattern[parts[c].front()];
        cl.hi = cl.lo;
        for (const auto k : parts[c]) {
            labels.id[k] = c;
            const Point& p = pattern[k];
            for (int i = 0; i < dim; ++i) {
                cl.lo[i] = std::min(cl.lo[i], p[i]);
                cl.hi[i] = std::max(cl.hi[i], p[i]);
                const auto& b = pattern.window().bound(i);
                const auto face = static_cast<std::size_t>(2 * i);
                cl.touches[face] = cl.touches[face] || p[i] - b.lo < radius;
                cl.touches[face + 1] = cl.touches[face + 1] || b.hi - p[i] < radius;
            }
        }
    }
    return labels;
}

enum class SpanMode { touch_all_faces, touch_two_opposite };

/// With touch_two_opposite, `axis` selects the pair of faces; without it any
/// pair qualifies.
inline std::size_t count_spanning_clusters(const ClusterLabels& labels, SpanMode mode, std::optional<int> axis = std::nullopt)
{
    const int dim = labels.dimension;
    if (axis) {
        ppstat::detail::require(*axis >= 0 && *axis < dim, "count_spanning_clusters: axis out of range");
    }
    std::size_t count = 0;
    for (const auto& cl : labels.clusters) {
        bool spans = false;
        if (mode == SpanMode::touch_all_faces) {
            spans = true;
            for (int f = 0; f < 2 * dim; ++f) {
                spans = spans && cl.touches[static_cast<std::size_t>(f)];
            }
        } else {
            for (int i = 0; i < dim; ++i) {
                if (axis && *axis != i) {
                    continue;
                }
                const auto face = static_cast<std::size_t>(2 * i);
                spans = spans || (cl.touches[face] && cl.touches[face + 1]);
            }
        }
        count += spans ? 1 : 0;
    }
    return count;
}

/// Cluster whose occupied region covers `origin` (the nearest point within
/// distance < R decides), if any.
inline std::optional<std::size_t> cluster_at(const ClusterLabels& labels, const PointPattern& pattern, const Point& origin)
{
    std::optional<std::size_t> best;
    double best_d = labels.radius;
    for (std::size_t k = 0; k < pattern.size(); ++k) {
        const double d = euclidean_distance(pattern[k], origin, pattern.dimension());
        if (d < best_d) {
            best_d = d;
            best = labels.id[k];
        }
    }
    return best;
}

/// Components of the origin's cluster outside B(origin, M) that reach the
/// window boundary. A point belongs to the outside part when its ball pokes
/// past the sphere, i.e. its centre is farther than M - R.
inline std::size_t count_m_branches(const ClusterLabels& labels, const PointPattern& pattern, const Point& origin, double M)
{
    detail::require_euclidean_box(pattern, "count_m_branches");
    ppstat::detail::require(pattern.size() == labels.id.size(), "count_m_branches: labels do not belong to this pattern");
    const auto w = cluster_at(labels, pattern, origin);
    if (!w) {
        return 0;
    }
    std::vector<std::size_t> outside;
    for (std::size_t k = 0; k < pattern.size(); ++k) {
        if (labels.id[k] == *w && euclidean_distance(pattern[k], origin, pattern.dimension()) > M - labels.radius) {
            outside.push_back(k);
        }
    }
    std::size_t branches = 0;
    for (const auto& part : detail::components(pattern, outside, labels.radius)) {
        const bool reaches = std::any_of(part.begin(), part.end(),
                                         [&](std::size_t k) { return detail::touches_boundary(pattern, k, labels.radius); });
        branches += reaches ? 1 : 0;
    }
    return branches;
}

} // namespace ppstat::percolation

#endif // PPSTAT_PERCOLATION_HPP
