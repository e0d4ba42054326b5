#ifndef PPSTAT_GENERATORS_HPP
#define PPSTAT_GENERATORS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/operators.hpp"
#include "ppstat/core/pattern.hpp"
#include "ppstat/core/rng.hpp"
#include "ppstat/gaf/gaf.hpp"

namespace ppstat::generators {

/// Isotropic i.i.d. displacement law for perturbed lattices.
struct Perturbation {
    enum class Kind { zero, uniform_ball, gaussian, heavy_tail };

    Kind kind = Kind::zero;
    /// Radius (uniform-ball), sigma per axis (gaussian), or alpha (heavy-tail).
    double parameter = 0.0;

    static Perturbation zero() { return {}; }

    static Perturbation uniform_ball(double radius)
    {
        ppstat::detail::require(radius > 0.0, "uniform-ball perturbation radius must be positive");
        return {Kind::uniform_ball, radius};
    }

    static Perturbation gaussian(double sigma)
    {
        ppstat::detail::require(sigma > 0.0, "gaussian perturbation sigma must be positive");
        return {Kind::gaussian, sigma};
    }

    /// Uniform direction, radial law P(R > r) = (1 + r)^(-alpha).
    static Perturbation heavy_tail(double alpha)
    {
        ppstat::detail::require(alpha > 0.0, "heavy-tail perturbation alpha must be positive");
        return {Kind::heavy_tail, alpha};
    }

    template <typename R>
    Point draw(R& rng, int dim) const
    {
        Point y;
        switch (kind) {
        case Kind::zero:
            break;
        case Kind::gaussian:
            for (int i = 0; i < dim; ++i) {
                y[i] = parameter * rng.normal();
            }
            break;
        case Kind::uniform_ball:
            for (;;) {
                double s = 0.0;
                for (int i = 0; i < dim; ++i) {
                    y[i] = rng.uniform(-1.0, 1.0);
                    s += y[i] * y[i];
                }
                if (s < 1.0) {
                    break;
                }
            }
            for (int i = 0; i < dim; ++i) {
                y[i] *= parameter;
            }
            break;
        case Kind::heavy_tail: {
            const double radius = std::pow(rng.uniform_open_left(), -1.0 / parameter) - 1.0;
            Point dir = unit_direction(rng, dim);
            for (int i = 0; i < dim; ++i) {
                y[i] = radius * dir[i];
            }
            break;
        }
        }
        return y;
    }

    /// P(|Y| > m).
    [[nodiscard]] double tail(double m, int dim) const
    {
        switch (kind) {
        case Kind::zero:
            return m < 0.0 ? 1.0 : 0.0;
        case Kind::uniform_ball:
            return m < parameter ? 1.0 : 0.0;
        case Kind::heavy_tail:
            return m <= 0.0 ? 1.0 : std::pow(1.0 + m, -parameter);
        case Kind::gaussian: {
            const double t = m / parameter;
            switch (dim) {
            case 1:
                return std::erfc(t / M_SQRT2);
            case 2:
                return std::exp(-0.5 * t * t);
            default:
                return std::erfc(t / M_SQRT2) + std::sqrt(2.0 / M_PI) * t * std::exp(-0.5 * t * t);
            }
        }
        }
        return 1.0;
    }

private:
    template <typename R>
    static Point unit_direction(R& rng, int dim)
    {
        Point d;
        if (dim == 1) {
            d[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
            return d;
        }
        for (;;) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                d[i] = rng.normal();
                s += d[i] * d[i];
            }
            if (s > 0.0) {
                s = std::sqrt(s);
                for (int i = 0; i < dim; ++i) {
                    d[i] /= s;
                }
                return d;
            }
        }
    }
};

/// Smallest margin m with P(|Y| > m) * (#sites in the buffer shell) < 1e-6.
inline double buffer_margin(const Perturbation& y, const Window& window)
{
    const int dim = window.dimension();
    if (y.kind == Perturbation::Kind::zero) {
        return 0.0;
    }
    if (y.kind == Perturbation::Kind::uniform_ball) {
        return y.parameter;
    }
    const auto shell_sites = [&](double m) {
        double outer = 1.0;
        double inner = 1.0;
        for (const auto& b : window.bounds()) {
            outer *= b.length() + 2.0 * m + 1.0;
            inner *= b.length();
        }
        return outer - inner;
    };
    const auto excess = [&](double m) { return y.tail(m, dim) * shell_sites(m) - 1e-6; };
    const double limit = 10.0 * window.diameter();
    double hi = 1.0;
    while (excess(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 2.0 * limit) {
            break;
        }
    }
    double lo = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    if (hi > limit) {
        throw std::invalid_argument(
            "perturbed lattice: buffer margin exceeds 10x the window diameter (perturbation tail too heavy)");
    }
    return hi;
}

struct Poisson {
    double intensity = 1.0;
};

struct ShiftedLattice {};

struct SitePercolation {
    double p = 0.5;
};

struct PerturbedLattice {
    Perturbation perturbation;
    /// Apply a common uniform shift U (for translation-invariant variants).
    bool shift = false;
    /// Overrides the automatic buffer margin (Euclidean windows only).
    std::optional<double> margin;
};

struct DoubledPerturbedLattice {
    double radius = 0.25;
};

/// d = 2: shifted lattice rows {x_2 = j} kept independently with probability
/// p. d = 3: independent shifted site-percolation planes (retention
/// `site_p`) stacked at the integer heights kept with probability p.
struct ColumnDeletedStack {
    double p = 0.5;
    double site_p = 0.75;
};

/// d = 1: N_i in {0, 1, 2} equally likely points, uniform in each [i, i+1).
struct IntervalCounts {
    bool shift = false;
};

/// Zeros of the planar GAF, served from the covering disc of the window.
struct GafPlanar {};

/// Zeros of the hyperbolic GAF in a disc window centred at 0.
struct GafHyperbolic {
    bool palm = false;
};

struct Superposition;

using Model = std::variant<Poisson, ShiftedLattice, SitePercolation, PerturbedLattice, DoubledPerturbedLattice,
                          ColumnDeletedStack, IntervalCounts, GafPlanar, GafHyperbolic, Superposition>;

/// Independent copies of each part, superposed.
struct Superposition {
    std::vector<Model> parts;
};

struct GeneratorSpec {
    Model model;
    Window window;
    Metric metric;
};

namespace detail {

inline constexpr std::uint64_t tag_site_keep = 1;
inline constexpr std::uint64_t tag_perturbation = 2;
inline constexpr std::uint64_t tag_doubled = 3;
inline constexpr std::uint64_t tag_row_keep = 5;
inline constexpr std::uint64_t tag_layer_shift = 6;
inline constexpr std::uint64_t tag_layer_site = 7;
inline constexpr std::uint64_t tag_interval = 8;

using Site = std::array<std::int64_t, 3>;

/// Integer sites whose (possibly displaced) points may land in the window.
/// On a torus the sites are one period, indexed canonically, and points wrap.
class LatticeFrame {
public:
    LatticeFrame(const Window& window, const Metric& metric, double margin)
        : window_(window), dim_(window.dimension()), torus_(metric.kind() == MetricKind::toroidal)
    {
        if (window.kind() != WindowKind::box) {
            throw std::invalid_argument("lattice generators require a box window");
        }
        for (int i = 0; i < dim_; ++i) {
            const auto& b = window.bound(i);
            if (torus_) {
                const double len = b.length();
                if (std::fabs(len - std::round(len)) > 1e-9 || std::fabs(metric.period(i) - len) > 1e-9) {
                    throw std::invalid_argument("lattice generators on a torus need integer periods equal to the window sides");
                }
                first_[idx(i)] = static_cast<std::int64_t>(std::ceil(b.lo));
                last_[idx(i)] = first_[idx(i)] + static_cast<std::int64_t>(std::round(len)) - 1;
            } else {
                first_[idx(i)] = static_cast<std::int64_t>(std::floor(b.lo - margin)) - 1;
                last_[idx(i)] = static_cast<std::int64_t>(std::ceil(b.hi + margin)) + 1;
            }
        }
    }

    template <typename Fn>
    void for_each_site(Fn&& fn) const
    {
        Site s{};
        for_each_site_axis(0, s, fn);
    }

    /// Wrapped (torus) or clipped (Euclidean, half-open) placement.
    [[nodiscard]] std::optional<Point> place(Point p) const
    {
        for (int i = 0; i < dim_; ++i) {
            const auto& b = window_.bound(i);
            if (torus_) {
                const double len = b.length();
                double x = p[i] - len * std::floor((p[i] - b.lo) / len);
                if (x >= b.hi) {
                    x -= len;
                }
                if (x < b.lo) {
                    x = b.lo;
                }
                p[i] = x;
            } else if (!(p[i] >= b.lo && p[i] < b.hi)) {
                return std::nullopt;
            }
        }
        return p;
    }

    [[nodiscard]] int dimension() const noexcept { return dim_; }

private:
    static std::size_t idx(int i) { return static_cast<std::size_t>(i); }

    template <typename Fn>
    void for_each_site_axis(int axis, Site& s, Fn& fn) const
    {
        if (axis == dim_) {
            fn(s);
            return;
        }
        for (std::int64_t k = first_[idx(axis)]; k <= last_[idx(axis)]; ++k) {
            s[idx(axis)] = k;
            for_each_site_axis(axis + 1, s, fn);
        }
    }

    const Window& window_;
    int dim_;
    bool torus_;
    Site first_{};
    Site last_{};
};

inline Point uniform_shift(Rng& rng, int dim)
{
    Point u;
    for (int i = 0; i < dim; ++i) {
        u[i] = rng.uniform();
    }
    return u;
}

inline Point site_point(const Site& s, const Point& shift, int dim)
{
    Point p;
    for (int i = 0; i < dim; ++i) {
        p[i] = shift[i] + static_cast<double>(s[static_cast<std::size_t>(i)]);
    }
    return p;
}

inline void require_box(const GeneratorSpec& spec, const char* what)
{
    if (spec.window.kind() != WindowKind::box) {
        throw std::invalid_argument(std::string(what) + " requires a box window");
    }
}

} // namespace detail

inline PointPattern sample_poisson(double intensity, const Window& window, const Metric& metric, const RngSpec& spec)
{
    if (!(intensity > 0.0)) {
        throw std::invalid_argument("sample_poisson: intensity must be positive");
    }
    if (window.kind() != WindowKind::box) {
        throw std::invalid_argument("sample_poisson requires a box window");
    }
    const double mean = intensity * window.volume();
    if (!(mean <= 1e8)) {
        throw std::invalid_argument("sample_poisson: expected count exceeds 1e8 points");
    }
    Rng rng(spec);
    const auto n = rng.poisson(mean);
    std::vector<Point> pts;
    pts.reserve(n);
    const int dim = window.dimension();
    for (std::uint64_t k = 0; k < n; ++k) {
        Point p;
        for (int i = 0; i < dim; ++i) {
            p[i] = rng.uniform(window.bound(i).lo, window.bound(i).hi);
        }
        pts.push_back(p);
    }
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_poisson(double intensity, const Window& window, const RngSpec& spec)
{
    return sample_poisson(intensity, window, Metric::euclidean(window.dimension()), spec);
}

/// U + Z^d restricted to the window, U uniform on [0,1)^d.
inline PointPattern sample_site_percolation(double p, const Window& window, const Metric& metric, const RngSpec& spec)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("sample_site_percolation: p must lie in [0, 1]");
    }
    detail::LatticeFrame frame(window, metric, 1.0);
    Rng rng(spec);
    const int dim = window.dimension();
    const Point u = detail::uniform_shift(rng, dim);
    std::vector<Point> pts;
    frame.for_each_site([&](const detail::Site& s) {
        if (p < 1.0) {
            KeyedRng keep(spec, detail::tag_site_keep, s);
            if (!keep.bernoulli(p)) {
                return;
            }
        }
        if (auto q = frame.place(detail::site_point(s, u, dim))) {
            pts.push_back(*q);
        }
    });
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_shifted_lattice(const Window& window, const Metric& metric, const RngSpec& spec)
{
    return sample_site_percolation(1.0, window, metric, spec);
}

inline PointPattern sample_shifted_lattice(const Window& window, const RngSpec& spec)
{
    return sample_shifted_lattice(window, Metric::euclidean(window.dimension()), spec);
}

/// {z + Y_z} (plus U when `shift`), all sites of an enlarged window perturbed.
inline PointPattern sample_perturbed_lattice(const PerturbedLattice& model, const Window& window, const Metric& metric,
                                             const RngSpec& spec)
{
    const bool torus = metric.kind() == MetricKind::toroidal;
    const double margin = torus ? 0.0 : model.margin.value_or(buffer_margin(model.perturbation, window));
    detail::LatticeFrame frame(window, metric, margin);
    const int dim = window.dimension();
    Point u;
    if (model.shift) {
        Rng rng(spec);
        u = detail::uniform_shift(rng, dim);
    }
    std::vector<Point> pts;
    frame.for_each_site([&](const detail::Site& s) {
        KeyedRng site_rng(spec, detail::tag_perturbation, s);
        const Point y = model.perturbation.draw(site_rng, dim);
        Point p = detail::site_point(s, u, dim);
        for (int i = 0; i < dim; ++i) {
            p[i] += y[i];
        }
        if (auto q = frame.place(p)) {
            pts.push_back(*q);
        }
    });
    return PointPattern(window, metric, std::move(pts));
}

/// U + {i + W_i, i + Y_i}, W and Y independent uniform on B(0, r).
inline PointPattern sample_doubled_perturbed_lattice(double radius, const Window& window, const Metric& metric,
                                                     const RngSpec& spec)
{
    if (!(radius > 0.0 && radius <= 0.25)) {
        throw std::invalid_argument("sample_doubled_perturbed_lattice: radius must lie in (0, 1/4]");
    }
    detail::LatticeFrame frame(window, metric, radius);
    const int dim = window.dimension();
    Rng rng(spec);
    const Point u = detail::uniform_shift(rng, dim);
    const auto ball = Perturbation::uniform_ball(radius);
    std::vector<Point> pts;
    frame.for_each_site([&](const detail::Site& s) {
        KeyedRng site_rng(spec, detail::tag_doubled, s);
        for (int copy = 0; copy < 2; ++copy) {
            const Point y = ball.draw(site_rng, dim);
            Point p = detail::site_point(s, u, dim);
            for (int i = 0; i < dim; ++i) {
                p[i] += y[i];
            }
            if (auto q = frame.place(p)) {
                pts.push_back(*q);
            }
        }
    });
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_column_deleted_stack(const ColumnDeletedStack& model, const Window& window,
                                                const Metric& metric, const RngSpec& spec)
{
    const int dim = window.dimension();
    if (dim != 2 && dim != 3) {
        throw std::invalid_argument("sample_column_deleted_stack: dimension must be 2 or 3");
    }
    if (!(model.p > 0.0 && model.p <= 1.0) || !(model.site_p >= 0.0 && model.site_p <= 1.0)) {
        throw std::invalid_argument("sample_column_deleted_stack: probabilities must lie in (0, 1]");
    }
    detail::LatticeFrame frame(window, metric, 1.0);
    std::vector<Point> pts;
    if (dim == 2) {
        Rng rng(spec);
        const Point u = detail::uniform_shift(rng, 2);
        frame.for_each_site([&](const detail::Site& s) {
            KeyedRng row(spec, detail::tag_row_keep, {s[1], 0, 0});
            if (model.p < 1.0 && !row.bernoulli(model.p)) {
                return;
            }
            if (auto q = frame.place(detail::site_point(s, u, 2))) {
                pts.push_back(*q);
            }
        });
    } else {
        frame.for_each_site([&](const detail::Site& s) {
            KeyedRng layer(spec, detail::tag_row_keep, {s[2], 0, 0});
            if (model.p < 1.0 && !layer.bernoulli(model.p)) {
                return;
            }
            KeyedRng layer_shift(spec, detail::tag_layer_shift, {s[2], 0, 0});
            const double ux = layer_shift.uniform();
            const double uy = layer_shift.uniform();
            if (model.site_p < 1.0) {
                KeyedRng keep(spec, detail::tag_layer_site, s);
                if (!keep.bernoulli(model.site_p)) {
                    return;
                }
            }
            Point p = make_point({static_cast<double>(s[0]) + ux, static_cast<double>(s[1]) + uy,
                                  static_cast<double>(s[2])});
            if (auto q = frame.place(p)) {
                pts.push_back(*q);
            }
        });
    }
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_interval_counts(const IntervalCounts& model, const Window& window, const Metric& metric,
                                           const RngSpec& spec)
{
    if (window.dimension() != 1) {
        throw std::invalid_argument("sample_interval_counts requires d = 1");
    }
    detail::LatticeFrame frame(window, metric, 1.0);
    double shift = 0.0;
    if (model.shift) {
        Rng rng(spec);
        shift = rng.uniform();
    }
    std::vector<Point> pts;
    frame.for_each_site([&](const detail::Site& s) {
        KeyedRng cell(spec, detail::tag_interval, s);
        const auto n = cell.below(3);
        for (std::uint64_t k = 0; k < n; ++k) {
            Point p;
            p[0] = static_cast<double>(s[0]) + cell.uniform() + shift;
            if (auto q = frame.place(p)) {
                pts.push_back(*q);
            }
        }
    });
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_gaf_planar_window(const Window& window, const Metric& metric, const RngSpec& spec)
{
    if (window.kind() != WindowKind::box || window.dimension() != 2) {
        throw std::invalid_argument("planar GAF zeros require a 2-d box window");
    }
    double rho = 0.0;
    for (int corner = 0; corner < 4; ++corner) {
        const double x = corner & 1 ? window.bound(0).hi : window.bound(0).lo;
        const double y = corner & 2 ? window.bound(1).hi : window.bound(1).lo;
        rho = std::max(rho, std::hypot(x, y));
    }
    // The covering disc is slightly enlarged so that zeros on the window corners are kept.
    const auto zeros = gaf::sample_gaf_planar(rho * (1.0 + 1e-9), spec);
    std::vector<Point> pts;
    for (const auto& p : zeros.pattern.points()) {
        if (window.contains(p)) {
            pts.push_back(p);
        }
    }
    return PointPattern(window, metric, std::move(pts));
}

inline PointPattern sample_gaf_hyperbolic_window(bool palm, const Window& window, const Metric& metric,
                                                 const RngSpec& spec)
{
    if (window.kind() != WindowKind::disc || window.center()[0] != 0.0 || window.center()[1] != 0.0) {
        throw std::invalid_argument("hyperbolic GAF zeros require a disc window centred at 0");
    }
    if (metric.kind() != MetricKind::hyperbolic_disc) {
        throw std::invalid_argument("hyperbolic GAF zeros require the hyperbolic-disc metric");
    }
    return gaf::sample_gaf_hyperbolic(window.radius(), spec, palm).pattern;
}

inline PointPattern sample(const Model& model, const Window& window, const Metric& metric, const RngSpec& spec);

namespace detail {

struct Sampler {
    const Window& window;
    const Metric& metric;
    const RngSpec& spec;

    PointPattern operator()(const Poisson& m) const { return sample_poisson(m.intensity, window, metric, spec); }
    PointPattern operator()(const ShiftedLattice&) const { return sample_shifted_lattice(window, metric, spec); }
    PointPattern operator()(const SitePercolation& m) const { return sample_site_percolation(m.p, window, metric, spec); }
    PointPattern operator()(const PerturbedLattice& m) const { return sample_perturbed_lattice(m, window, metric, spec); }
    PointPattern operator()(const DoubledPerturbedLattice& m) const
    {
        return sample_doubled_perturbed_lattice(m.radius, window, metric, spec);
    }
    PointPattern operator()(const ColumnDeletedStack& m) const
    {
        return sample_column_deleted_stack(m, window, metric, spec);
    }
    PointPattern operator()(const IntervalCounts& m) const { return sample_interval_counts(m, window, metric, spec); }
    PointPattern operator()(const GafPlanar&) const { return sample_gaf_planar_window(window, metric, spec); }
    PointPattern operator()(const GafHyperbolic& m) const
    {
        return sample_gaf_hyperbolic_window(m.palm, window, metric, spec);
    }
    PointPattern operator()(const Superposition& m) const
    {
        PointPattern out(window, metric);
        for (std::size_t k = 0; k < m.parts.size(); ++k) {
            out = superpose(out, sample(m.parts[k], window, metric, spec.child(k)));
        }
        return out;
    }
};

} // namespace detail

inline PointPattern sample(const Model& model, const Window& window, const Metric& metric, const RngSpec& spec)
{
    if (window.dimension() != metric.dimension()) {
        throw std::invalid_argument("generator: window and metric dimensions differ");
    }
    return std::visit(detail::Sampler{window, metric, spec}, model);
}

inline PointPattern sample(const GeneratorSpec& spec, const RngSpec& rng)
{
    return sample(spec.model, spec.window, spec.metric, rng);
}

} // namespace ppstat::generators

#endif // PPSTAT_GENERATORS_HPP
