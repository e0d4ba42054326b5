#ifndef PPSTAT_GAF_GAF_HPP
#define PPSTAT_GAF_GAF_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "ppstat/core/error.hpp"
#include "ppstat/core/pattern.hpp"
#include "ppstat/core/rng.hpp"
#include "ppstat/gaf/polynomial.hpp"

namespace ppstat::gaf {

enum class GafKind { planar, hyperbolic };

/// Degree that keeps the neglected planar tail below 1e-12 of E|f| on |z| = rho.
inline int planar_degree(double rho)
{
    return std::max(32, static_cast<int>(std::ceil(rho * rho + 12.0 * rho + 25.0)));
}

inline int hyperbolic_degree(double rmax)
{
    return std::max(8, static_cast<int>(std::ceil(std::log(1e-12 * (1.0 - rmax)) / std::log(rmax))));
}

/// Truncated random power series f(z) = sum_{n<=N} c_n z^n.
///
/// Coefficients are held in scaled form b_n = c_n s^n with s = rho for the
/// planar series, since c_n = a_n / sqrt(n!) underflows long before n reaches
/// the degrees needed for rho near 20. Evaluation uses w = z / s.
class GafSeries {
public:
    GafSeries(GafKind kind, std::vector<cplx> gaussians, double scale, bool palm, RngSpec provenance)
        : kind_(kind), gaussians_(std::move(gaussians)), scale_(scale), palm_(palm), provenance_(provenance)
    {
        ppstat::detail::require(!gaussians_.empty(), "GafSeries: at least one coefficient required");
        ppstat::detail::require(scale_ > 0.0, "GafSeries: scale must be positive");
        scaled_.resize(gaussians_.size());
        const double log_s = std::log(scale_);
        for (std::size_t n = 0; n < gaussians_.size(); ++n) {
            const double k = static_cast<double>(n);
            const double log_weight =
                kind_ == GafKind::planar ? k * log_s - 0.5 * std::lgamma(k + 1.0) : k * log_s;
            scaled_[n] = leading(n) * std::exp(log_weight);
        }
    }

    [[nodiscard]] GafKind kind() const noexcept { return kind_; }
    [[nodiscard]] int degree() const noexcept { return static_cast<int>(gaussians_.size()) - 1; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] bool palm() const noexcept { return palm_; }
    [[nodiscard]] const RngSpec& provenance() const noexcept { return provenance_; }

    /// The standard complex gaussian draws a_0..a_N, in stream order.
    [[nodiscard]] const std::vector<cplx>& gaussians() const noexcept { return gaussians_; }
    [[nodiscard]] const std::vector<cplx>& scaled_coefficients() const noexcept { return scaled_; }

    /// c_n (may underflow to 0 for large planar n).
    [[nodiscard]] cplx coefficient(std::size_t n) const
    {
        const double k = static_cast<double>(n);
        const double log_weight = kind_ == GafKind::planar ? -0.5 * std::lgamma(k + 1.0) : 0.0;
        return leading(n) * std::exp(log_weight);
    }

    [[nodiscard]] HornerResult evaluate(cplx z) const
    {
        auto h = horner(scaled_, z / scale_);
        h.derivative /= scale_;
        return h;
    }

    [[nodiscard]] cplx operator()(cplx z) const { return evaluate(z).value; }

    /// max_n |c_n| r^n, the size of the series terms on |z| = r.
    [[nodiscard]] double term_scale(double r) const
    {
        const double ratio = r / scale_;
        double best = 0.0;
        double power = 1.0;
        for (const auto& b : scaled_) {
            best = std::max(best, std::abs(b) * power);
            power *= ratio;
        }
        return best;
    }

private:
    /// a_n, except the Palm variant replaces (a_0, a_1) by (0, a_hat) with
    /// |a_hat|^2 = |a_0|^2 + |a_1|^2 ~ Gamma(2, 1) (radial density 2r^3 e^{-r^2})
    /// and the phase of a_1.
    [[nodiscard]] cplx leading(std::size_t n) const
    {
        if (!palm_ || n > 1) {
            return gaussians_[n];
        }
        if (n == 0) {
            return 0.0;
        }
        const double modulus = std::sqrt(std::norm(gaussians_[0]) + std::norm(gaussians_[1]));
        const double phase = gaussians_.size() > 1 ? std::arg(gaussians_[1]) : 0.0;
        return std::polar(modulus, phase);
    }

    GafKind kind_;
    std::vector<cplx> gaussians_;
    std::vector<cplx> scaled_;
    double scale_;
    bool palm_;
    RngSpec provenance_;
};

/// Draws a_0..a_degree from the stream in index order.
inline std::vector<cplx> draw_gaussians(int degree, const RngSpec& spec)
{
    Rng rng(spec);
    std::vector<cplx> a(static_cast<std::size_t>(degree) + 1);
    for (auto& x : a) {
        x = rng.complex_normal();
    }
    return a;
}

inline GafSeries planar_series(double rho, int degree, const RngSpec& spec)
{
    return GafSeries(GafKind::planar, draw_gaussians(degree, spec), rho, false, spec);
}

inline GafSeries hyperbolic_series(int degree, const RngSpec& spec, bool palm)
{
    return GafSeries(GafKind::hyperbolic, draw_gaussians(degree, spec), 1.0, palm, spec);
}

struct ZeroCount {
    int count = 0;
    /// Contour radius actually used (differs from the request after a jitter).
    double radius = 0.0;
    int jitters = 0;
};

namespace detail {

inline constexpr int contour_nodes = 4096;
inline constexpr double contour_clearance = 1e-6;

/// Winding number of f around |z| = r from argument increments, subdividing
/// any arc whose increment exceeds pi/4. Returns nullopt when a zero sits
/// within the clearance of the contour or the sum is not near an integer.
inline std::optional<int> winding_number(const GafSeries& f, double r)
{
    const auto at = [&](double theta) { return f.evaluate(std::polar(r, theta)); };
    const double h = 2.0 * M_PI / contour_nodes;
    std::vector<HornerResult> values(contour_nodes);
    for (int k = 0; k < contour_nodes; ++k) {
        values[static_cast<std::size_t>(k)] = at(h * k);
    }
    // Locate zeros close to the contour by Newton from suspicious nodes.
    const double node_spacing = r * h;
    for (int k = 0; k < contour_nodes; ++k) {
        const auto& v = values[static_cast<std::size_t>(k)];
        if (v.derivative == 0.0 || std::abs(v.value / v.derivative) > 2.0 * node_spacing) {
            continue;
        }
        cplx z = std::polar(r, h * k);
        for (int it = 0; it < 50; ++it) {
            const auto e = f.evaluate(z);
            if (e.derivative == 0.0) {
                break;
            }
            const cplx step = e.value / e.derivative;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) {
                break;
            }
        }
        if (std::abs(std::abs(z) - r) < contour_clearance) {
            return std::nullopt;
        }
    }
    double total = 0.0;
    const auto increment = [](cplx a, cplx b) { return std::arg(b / a); };
    // Recursive refinement of one arc.
    const auto refine = [&](auto&& self, double t0, cplx f0, double t1, cplx f1, int depth) -> double {
        const double d = increment(f0, f1);
        if (std::fabs(d) <= M_PI / 4.0 || depth >= 40) {
            return d;
        }
        const double tm = 0.5 * (t0 + t1);
        const cplx fm = at(tm).value;
        return self(self, t0, f0, tm, fm, depth + 1) + self(self, tm, fm, t1, f1, depth + 1);
    };
    for (int k = 0; k < contour_nodes; ++k) {
        const auto next = static_cast<std::size_t>((k + 1) % contour_nodes);
        const cplx f0 = values[static_cast<std::size_t>(k)].value;
        const cplx f1 = values[next].value;
        if (f0 == 0.0 || f1 == 0.0) {
            return std::nullopt;
        }
        total += refine(refine, h * k, f0, h * (k + 1), f1, 0);
    }
    const double turns = total / (2.0 * M_PI);
    const double rounded = std::round(turns);
    if (std::fabs(turns - rounded) > 0.05) {
        return std::nullopt;
    }
    return static_cast<int>(rounded);
}

} // namespace detail

/// Number of zeros of the truncated series in |z| < r by the argument
/// principle. Retries with a slightly moved contour when a zero lies within
/// 1e-6 of it.
inline ZeroCount count_zeros_argument_principle(const GafSeries& f, double r)
{
    ppstat::detail::require(r > 0.0, "count_zeros_argument_principle: radius must be positive");
    static constexpr std::array<double, 6> offsets{0.0, 1e-4, -1e-4, 2e-4, -2e-4, 3e-4};
    for (std::size_t attempt = 0; attempt < offsets.size(); ++attempt) {
        const double radius = r * (1.0 + offsets[attempt]);
        if (auto n = detail::winding_number(f, radius)) {
            return {*n, radius, static_cast<int>(attempt)};
        }
    }
    throw ComputeError("count_zeros_argument_principle: contour too close to a zero after 5 jitter retries");
}

struct SampleOptions {
    /// Test hook: use this truncation degree instead of the automatic one.
    std::optional<int> degree;
    /// Cross-check the root count against the argument principle.
    bool verify_count = true;
    RootOptions roots{};
};

/// Zeros of one truncated series inside a disc, as a point pattern plus
/// per-zero diagnostics.
struct ZeroSet {
    PointPattern pattern;
    /// |f(z)| at each reported zero, in the pattern's canonical order.
    std::vector<double> residuals;
    std::vector<char> polished;
    GafSeries series;
    double domain_radius = 0.0;
};

namespace detail {

struct PolishedZero {
    cplx z;
    double residual = 0.0;
    bool polished = false;
};

inline PolishedZero polish(const GafSeries& f, cplx z)
{
    double best_residual = std::abs(f(z));
    cplx best = z;
    bool improved = false;
    for (int it = 0; it < 8; ++it) {
        const auto e = f.evaluate(z);
        if (e.derivative == 0.0) {
            break;
        }
        const cplx step = e.value / e.derivative;
        z -= step;
        const double res = std::abs(f(z));
        if (res < best_residual) {
            best_residual = res;
            best = z;
            improved = true;
        }
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) {
            break;
        }
    }
    return {best, best_residual, improved || best_residual == 0.0};
}

inline ZeroSet collect_zeros(GafSeries series, double domain, bool closed, Window window, Metric metric,
                             const SampleOptions& options)
{
    const Roots roots = polynomial_roots(series.scaled_coefficients(), options.roots);
    const double scale = series.scale();
    const double bound = 1e-10 * std::max(1.0, series.term_scale(domain));
    std::vector<PolishedZero> zeros;
    for (std::size_t i = 0; i < roots.values.size(); ++i) {
        const cplx z = roots.values[i] * scale;
        // A generous band so that polishing can move a zero across the boundary.
        if (std::abs(z) > domain * (1.0 + 1e-6) + 1e-9) {
            continue;
        }
        if (!roots.converged[i] && std::abs(series(z)) > bound) {
            throw ComputeError("gaf: root finder did not converge for a zero inside the domain");
        }
        PolishedZero pz = roots.values[i] == 0.0 ? PolishedZero{0.0, 0.0, true} : polish(series, z);
        const double modulus = std::abs(pz.z);
        if (closed ? modulus > domain : modulus >= domain) {
            continue;
        }
        if (pz.residual > bound) {
            throw ComputeError("gaf: zero residual above tolerance after Newton polishing");
        }
        zeros.push_back(pz);
    }
    std::sort(zeros.begin(), zeros.end(), [](const PolishedZero& a, const PolishedZero& b) {
        return a.z.real() != b.z.real() ? a.z.real() < b.z.real() : a.z.imag() < b.z.imag();
    });
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        for (std::size_t j = i + 1; j < zeros.size(); ++j) {
            if (std::abs(zeros[i].z - zeros[j].z) <= 1e-8) {
                throw ComputeError("gaf: two reported zeros closer than 1e-8");
            }
        }
    }
    if (options.verify_count) {
        const ZeroCount count = count_zeros_argument_principle(series, domain);
        std::size_t inside = 0;
        for (std::size_t i = 0; i < roots.values.size(); ++i) {
            inside += std::abs(roots.values[i] * scale) < count.radius ? 1 : 0;
        }
        if (static_cast<int>(inside) != count.count) {
            throw ComputeError("gaf: root-finder count disagrees with the argument principle");
        }
    }
    std::vector<Point> points;
    points.reserve(zeros.size());
    for (const auto& z : zeros) {
        points.push_back(make_point({z.z.real(), z.z.imag()}));
    }
    PointPattern pattern(std::move(window), std::move(metric), std::move(points));
    std::vector<double> residuals(pattern.size());
    std::vector<char> polished(pattern.size());
    for (const auto& z : zeros) {
        const auto k = pattern.find(make_point({z.z.real(), z.z.imag()}));
        residuals[k] = z.residual;
        polished[k] = z.polished ? 1 : 0;
    }
    return ZeroSet{std::move(pattern), std::move(residuals), std::move(polished), std::move(series), domain};
}

} // namespace detail

/// Zeros of the planar GAF f(z) = sum a_n z^n / sqrt(n!) inside |z| < rho.
/// The window is the box [-rho, rho]^2 with the Euclidean metric.
inline ZeroSet sample_gaf_planar(double rho, const RngSpec& spec, const SampleOptions& options = {})
{
    if (!(rho > 0.0 && rho <= 20.0)) {
        throw std::invalid_argument("sample_gaf_planar: rho must lie in (0, 20]");
    }
    const int degree = options.degree.value_or(planar_degree(rho));
    ppstat::detail::require(degree >= 1, "sample_gaf_planar: degree must be at least 1");
    return detail::collect_zeros(planar_series(rho, degree, spec), rho, false,
                                 Window::box({{-rho, rho}, {-rho, rho}}), Metric::euclidean(2), options);
}

/// Zeros of the hyperbolic GAF g(z) = sum a_n z^n in |z| <= rmax, reported in
/// a disc window under the hyperbolic metric. With `palm`, g(0) = 0.
inline ZeroSet sample_gaf_hyperbolic(double rmax, const RngSpec& spec, bool palm, const SampleOptions& options = {})
{
    if (!(rmax > 0.0 && rmax <= 0.995)) {
        throw std::invalid_argument("sample_gaf_hyperbolic: rmax must lie in (0, 0.995]");
    }
    const int degree = options.degree.value_or(hyperbolic_degree(rmax));
    ppstat::detail::require(degree >= 1, "sample_gaf_hyperbolic: degree must be at least 1");
    return detail::collect_zeros(hyperbolic_series(degree, spec, palm), rmax, true, Window::disc(Point{}, rmax),
                                 Metric::hyperbolic_disc(), options);
}

} // namespace ppstat::gaf

#endif // PPSTAT_GAF_GAF_HPP
