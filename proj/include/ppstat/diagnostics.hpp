#ifndef PPSTAT_DIAGNOSTICS_HPP
#define PPSTAT_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include "ppstat/core/error.hpp"
#include "ppstat/core/io.hpp"
#include "ppstat/core/operators.hpp"
#include "ppstat/core/parallel.hpp"
#include "ppstat/core/pattern.hpp"
#include "ppstat/core/rng.hpp"
#include "ppstat/generators.hpp"

namespace ppstat::diagnostics {

enum class Profile { tent, indicator };

/// h_n(x) = h(x / n). The tent is clamp(2 - 2|x|, 0, 1): 1 on B(0, 1/2),
/// zero off B(0, 1), Lipschitz constant 2. The indicator is 1 on (-1, 1], d = 1 only.
struct TestFunction {
    int dimension = 2;
    double scale = 1.0;
    Profile profile = Profile::tent;

    static constexpr double lipschitz = 2.0;

    static TestFunction tent(int dimension, double scale) { return {dimension, scale, Profile::tent}; }

    static TestFunction indicator(double scale) { return {1, scale, Profile::indicator}; }

    static double tent_profile(double r) { return std::clamp(2.0 - 2.0 * r, 0.0, 1.0); }

    /// h_n at displacement x from the centre.
    [[nodiscard]] double operator()(const Point& x) const
    {
        if (profile == Profile::indicator) {
            const double u = x[0] / scale;
            return (u > -1.0 && u <= 1.0) ? 1.0 : 0.0;
        }
        return tent_profile(euclidean_norm(x, dimension) / scale);
    }
};

namespace detail {

inline void require_support_fits(const PointPattern& pattern, const Point& center, double radius, const char* what)
{
    const auto& m = pattern.metric();
    bool ok = false;
    if (m.kind() == MetricKind::toroidal) {
        ok = true;
        for (int i = 0; i < pattern.dimension(); ++i) {
            ok = ok && 2.0 * radius <= m.period(i);
        }
    } else if (m.kind() == MetricKind::euclidean) {
        ok = pattern.window().contains_ball(center, radius);
    } else {
        throw std::invalid_argument(std::string(what) + ": the hyperbolic metric is not supported");
    }
    if (!ok) {
        throw std::invalid_argument(std::string(what) + ": support ball of radius " + std::to_string(radius) +
                                    " exits the window");
    }
}

inline Point displacement(const Metric& m, const Point& x, const Point& center)
{
    Point d;
    for (int i = 0; i < m.dimension(); ++i) {
        d[i] = m.kind() == MetricKind::toroidal ? m.axis_delta(center[i], x[i], i) : x[i] - center[i];
    }
    return d;
}

} // namespace detail

/// Pi(h_n) with `center` in the role of the origin.
inline double eval_linear_statistic(const PointPattern& pattern, const TestFunction& tf, const Point& center)
{
    ppstat::detail::require(tf.dimension == pattern.dimension(), "eval_linear_statistic: dimension mismatch");
    ppstat::detail::require(tf.scale > 0.0, "eval_linear_statistic: scale must be positive");
    detail::require_support_fits(pattern, center, tf.scale, "eval_linear_statistic");
    double sum = 0.0;
    for (const auto& p : pattern.points()) {
        sum += tf(detail::displacement(pattern.metric(), p, center));
    }
    return sum;
}

struct ScaleStats {
    double scale = 0.0;
    std::size_t reps = 0;
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
};

enum class Trend { decaying, bounded, growing };

inline const char* to_string(Trend t)
{
    switch (t) {
    case Trend::decaying:
        return "decaying";
    case Trend::growing:
        return "growing";
    default:
        return "bounded";
    }
}

struct ReplicateStats {
    std::vector<ScaleStats> scales;
    /// covariance[i][j] between the statistics at scales i and j.
    std::vector<std::vector<double>> covariance;
    /// values[i][r]: statistic at scale i in replicate r.
    std::vector<std::vector<double>> values;
    /// Kendall tau of variance against scale.
    double kendall_tau = 0.0;
};

/// Mean, variance and their standard errors from one sample.
inline ScaleStats sample_moments(double scale, const std::vector<double>& x)
{
    ScaleStats s;
    s.scale = scale;
    s.reps = x.size();
    const auto n = static_cast<double>(x.size());
    if (x.size() < 4) {
        throw std::invalid_argument("sample_moments: need at least 4 replicates");
    }
    double sum = 0.0;
    for (double v : x) {
        sum += v;
    }
    s.mean = sum / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    s.variance = m2 / (n - 1.0);
    m4 /= n;
    s.mean_se = std::sqrt(s.variance / n);
    const double var_of_var = (m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n;
    s.variance_se = std::sqrt(std::max(0.0, var_of_var));
    return s;
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= n;
    mb /= n;
    double c = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        c += (a[k] - ma) * (b[k] - mb);
    }
    return c / (n - 1.0);
}

/// Kendall tau-a.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y)
{
    ppstat::detail::require(x.size() == y.size() && x.size() >= 2, "kendall_tau: need two equal-length series");
    const auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    long s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            s += sign(x[j] - x[i]) * sign(y[j] - y[i]);
        }
    }
    const double pairs = static_cast<double>(x.size() * (x.size() - 1) / 2);
    return static_cast<double>(s) / pairs;
}

/// Monotone if |tau| >= 0.8 and max/min variance >= 2, otherwise bounded.
inline Trend classify_trend(const std::vector<double>& scales, const std::vector<double>& variances)
{
    if (scales.size() < 4) {
        throw std::invalid_argument("classify_trend: need at least 4 scales");
    }
    const double tau = kendall_tau(scales, variances);
    const auto [lo, hi] = std::minmax_element(variances.begin(), variances.end());
    const bool wide = *lo > 0.0 ? *hi / *lo >= 2.0 : *hi > 0.0;
    if (wide && tau >= 0.8) {
        return Trend::growing;
    }
    if (wide && tau <= -0.8) {
        return Trend::decaying;
    }
    return Trend::bounded;
}

inline ReplicateStats summarize(const std::vector<double>& scales, std::vector<std::vector<double>> values)
{
    ReplicateStats out;
    std::vector<double> variances;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        out.scales.push_back(sample_moments(scales[i], values[i]));
        variances.push_back(out.scales.back().variance);
    }
    out.covariance.assign(scales.size(), std::vector<double>(scales.size(), 0.0));
    for (std::size_t i = 0; i < scales.size(); ++i) {
        for (std::size_t j = i; j < scales.size(); ++j) {
            out.covariance[i][j] = out.covariance[j][i] = covariance(values[i], values[j]);
        }
    }
    out.kendall_tau = scales.size() >= 2 ? kendall_tau(scales, variances) : 0.0;
    out.values = std::move(values);
    return out;
}

using Sampler = std::function<PointPattern(const RngSpec&)>;

struct FluctuationOptions {
    int workers = 1;
    Profile profile = Profile::tent;
    /// Centre of the test functions; the window centre when empty.
    std::optional<Point> center;
};

/// Replicate r uses rng.child(r). Every statistic of a replicate comes from
/// the same pattern, so scales are correlated as they should be.
inline ReplicateStats estimate_fluctuation(const Sampler& sampler, const std::vector<double>& scales, std::size_t reps,
                                           const RngSpec& rng, const FluctuationOptions& options = {})
{
    if (reps < 100) {
        throw std::invalid_argument("estimate_fluctuation: at least 100 replicates are required");
    }
    ppstat::detail::require(!scales.empty(), "estimate_fluctuation: no scales given");
    const auto rows = parallel_map(reps, options.workers, [&](std::size_t r) {
        const PointPattern p = sampler(rng.child(r));
        const Point c = options.center.value_or(p.window().center());
        std::vector<double> row;
        for (double s : scales) {
            const TestFunction tf{p.dimension(), s, options.profile};
            row.push_back(eval_linear_statistic(p, tf, c));
        }
        return row;
    });
    std::vector<std::vector<double>> values(scales.size(), std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < scales.size(); ++i) {
            values[i][r] = rows[r][i];
        }
    }
    return summarize(scales, std::move(values));
}

inline void require_window_fits(const generators::GeneratorSpec& gen, double radius, const char* what)
{
    const PointPattern empty(gen.window, gen.metric);
    detail::require_support_fits(empty, gen.window.center(), radius, what);
}

inline ReplicateStats estimate_fluctuation(const generators::GeneratorSpec& gen, const std::vector<double>& scales,
                                           std::size_t reps, const RngSpec& rng, const FluctuationOptions& options = {})
{
    for (double s : scales) {
        require_window_fits(gen, s, "estimate_fluctuation");
    }
    return estimate_fluctuation([&](const RngSpec& r) { return generators::sample(gen, r); }, scales, reps, rng, options);
}

/// N_n = Lambda(c - n, c + n] - 2n for a unit-intensity process on the line.
inline long n1_statistic(const PointPattern& pattern, long n, double center = 0.0)
{
    ppstat::detail::require(pattern.dimension() == 1, "n1_statistic: pattern must be one-dimensional");
    ppstat::detail::require(n > 0, "n1_statistic: n must be a positive integer");
    const Point c = make_point({center});
    const auto& m = pattern.metric();
    const double half = static_cast<double>(n);
    if (m.kind() == MetricKind::toroidal) {
        if (2.0 * half > m.period(0)) {
            throw std::invalid_argument("n1_statistic: window too small for (-n, n]");
        }
    } else {
        const auto& b = pattern.window().bound(0);
        if (!(b.lo <= center - half && center + half <= b.hi)) {
            throw std::invalid_argument("n1_statistic: window too small for (-n, n]");
        }
    }
    const TestFunction tf = TestFunction::indicator(half);
    long count = 0;
    for (const auto& p : pattern.points()) {
        count += tf(detail::displacement(m, p, c)) > 0.0 ? 1 : 0;
    }
    return count - 2 * n;
}

struct TransportBounds {
    /// Expected number of sites z <= 0 displaced into [0, inf).
    double plus = 0.0;
    /// Expected number of sites z >= 0 displaced into (-inf, 0].
    double minus = 0.0;
    std::size_t terms = 0;
};

/// K+ = sum_{k>=0} P(Y >= k) and K- = sum_{k>=0} P(Y <= -k) for a symmetric
/// displacement law on the line, summed until a term drops below 1e-12 of
/// the running total.
inline TransportBounds transport_bounds(const generators::Perturbation& y)
{
    using Kind = generators::Perturbation::Kind;
    if (y.kind == Kind::heavy_tail && y.parameter <= 1.0) {
        throw ComputeError("transport_bounds: E|Y| is infinite for heavy-tail alpha <= 1");
    }
    TransportBounds k;
    const double at_zero = y.kind == Kind::zero ? 1.0 : 0.5;
    double sum = at_zero;
    constexpr std::size_t max_terms = 100'000'000;
    for (std::size_t j = 1; j < max_terms; ++j) {
        const double term = 0.5 * y.tail(static_cast<double>(j), 1);
        sum += term;
        k.terms = j;
        if (term < 1e-12 * sum) {
            break;
        }
    }
    k.plus = sum;
    k.minus = sum;
    return k;
}

/// Re-rooting at a typical point: a pattern is kept with probability
/// N_core / cap (size-biasing), then a uniform core point is moved to the
/// origin. The core is the centred box of half the window volume.
class PalmSampler {
public:
    PalmSampler(Sampler sampler, const Window& window, const RngSpec& pilot, std::size_t pilot_draws = 32)
        : sampler_(std::move(sampler)), core_(core_of(window))
    {
        double sum = 0.0;
        double sum2 = 0.0;
        for (std::size_t k = 0; k < pilot_draws; ++k) {
            const double n = static_cast<double>(core_count(sampler_(pilot.child(k))));
            sum += n;
            sum2 += n * n;
        }
        const double mean = sum / static_cast<double>(pilot_draws);
        const double sd = std::sqrt(std::max(0.0, sum2 / static_cast<double>(pilot_draws) - mean * mean));
        cap_ = std::ceil(mean + 8.0 * sd + 8.0);
    }

    PalmSampler(const generators::GeneratorSpec& gen, const RngSpec& pilot)
        : PalmSampler([gen](const RngSpec& r) { return generators::sample(gen, r); }, gen.window, pilot)
    {
    }

    [[nodiscard]] const Window& core() const noexcept { return core_; }
    [[nodiscard]] double cap() const noexcept { return cap_; }
    /// Draws whose core count exceeded the cap (accepted with probability 1).
    [[nodiscard]] std::size_t cap_exceeded() const noexcept { return cap_exceeded_; }

    PointPattern sample(const RngSpec& rng)
    {
        Rng choose(rng.child(0));
        std::size_t empty_in_a_row = 0;
        for (std::uint64_t attempt = 1;; ++attempt) {
            PointPattern p = sampler_(rng.child(attempt));
            std::vector<std::size_t> in_core;
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (core_.contains(p[k])) {
                    in_core.push_back(k);
                }
            }
            if (in_core.empty()) {
                if (++empty_in_a_row == 100) {
                    throw ComputeError("palm_sample_empirical: 100 consecutive samples with an empty core");
                }
                continue;
            }
            empty_in_a_row = 0;
            const auto n = static_cast<double>(in_core.size());
            if (n > cap_) {
                ++cap_exceeded_;
            } else if (choose.uniform() * cap_ >= n) {
                continue;
            }
            const std::size_t pick = in_core[choose.below(in_core.size())];
            return recentre(p, p[pick]);
        }
    }

    static Window core_of(const Window& window)
    {
        if (window.kind() != WindowKind::box) {
            throw std::invalid_argument("palm sampling needs a box window");
        }
        const double shrink = std::pow(0.5, 1.0 / static_cast<double>(window.dimension()));
        std::vector<Interval> b;
        for (const auto& iv : window.bounds()) {
            const double mid = 0.5 * (iv.lo + iv.hi);
            const double half = 0.5 * iv.length() * shrink;
            b.push_back({mid - half, mid + half});
        }
        return Window::box(std::move(b));
    }

private:
    [[nodiscard]] std::size_t core_count(const PointPattern& p) const
    {
        return static_cast<std::size_t>(
            std::count_if(p.points().begin(), p.points().end(), [&](const Point& x) { return core_.contains(x); }));
    }

    Sampler sampler_;
    Window core_;
    double cap_ = 1.0;
    std::size_t cap_exceeded_ = 0;
};

/// One Palm draw; the size-biasing cap comes from a pilot on rng.child(~0).
inline PointPattern palm_sample_empirical(const generators::GeneratorSpec& gen, const RngSpec& rng)
{
    PalmSampler sampler(gen, rng.child(~std::uint64_t{0}));
    return sampler.sample(rng);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Chi-square test of homogeneity for two samples of counts. Adjacent
/// values are pooled until every cell expects at least 5 in each sample.
inline ChiSquareResult chi_square_two_sample(const std::vector<long>& a, const std::vector<long>& b)
{
    ppstat::detail::require(!a.empty() && !b.empty(), "chi_square_two_sample: empty sample");
    std::map<long, std::pair<double, double>> table;
    for (long v : a) {
        table[v].first += 1.0;
    }
    for (long v : b) {
        table[v].second += 1.0;
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double total = na + nb;
    std::vector<std::pair<double, double>> cells;
    std::pair<double, double> acc{0.0, 0.0};
    const auto enough = [&](const std::pair<double, double>& c) {
        const double col = c.first + c.second;
        return col * na / total >= 5.0 && col * nb / total >= 5.0;
    };
    for (const auto& [value, c] : table) {
        acc.first += c.first;
        acc.second += c.second;
        if (enough(acc)) {
            cells.push_back(acc);
            acc = {0.0, 0.0};
        }
    }
    if (acc.first + acc.second > 0.0) {
        if (cells.empty()) {
            cells.push_back(acc);
        } else {
            cells.back().first += acc.first;
            cells.back().second += acc.second;
        }
    }
    ChiSquareResult r;
    r.dof = static_cast<int>(cells.size()) - 1;
    if (r.dof < 1) {
        return r;
    }
    for (const auto& [ca, cb] : cells) {
        const double col = ca + cb;
        const double ea = col * na / total;
        const double eb = col * nb / total;
        r.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    }
    const boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

enum class Verdict { evidence_against_tolerance, consistent_with_tolerance, inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::evidence_against_tolerance:
        return "evidence-against-tolerance";
    case Verdict::consistent_with_tolerance:
        return "consistent-with-tolerance";
    default:
        return "inconclusive";
    }
}

/// Unit-ball counts count as rigid when their variance/mean ratio is below this.
inline constexpr double rigid_dispersion = 0.6;

struct ToleranceOptions {
    std::size_t reps = 200;
    int workers = 1;
    /// Defaults to four scales r/8, r/4, r/2, r with r the largest ball
    /// around the window centre.
    std::vector<double> scales;
};

struct ToleranceReport {
    Trend trend = Trend::bounded;
    ReplicateStats fluctuation;
    long count_min = 0;
    long count_max = 0;
    double count_mean = 0.0;
    double count_dispersion = 0.0;
    bool rigid = false;
    Verdict verdict = Verdict::inconclusive;
};

inline std::vector<double> default_scales(const generators::GeneratorSpec& gen)
{
    double r = 0.0;
    if (gen.metric.kind() == MetricKind::toroidal) {
        r = std::numeric_limits<double>::infinity();
        for (int i = 0; i < gen.metric.dimension(); ++i) {
            r = std::min(r, 0.5 * gen.metric.period(i));
        }
    } else {
        r = gen.window.distance_to_boundary(gen.window.center());
    }
    return {r / 8.0, r / 4.0, r / 2.0, r};
}

/// Fluctuation trend plus unit-ball count probes. Decaying or bounded
/// variance with rigid counts is evidence against tolerance; growing
/// variance is consistent with it; anything else is inconclusive.
inline ToleranceReport tolerance_report(const generators::GeneratorSpec& gen, const RngSpec& rng,
                                        const ToleranceOptions& options = {})
{
    const auto scales = options.scales.empty() ? default_scales(gen) : options.scales;
    for (double s : scales) {
        require_window_fits(gen, std::max(s, 1.0), "tolerance_report");
    }
    const auto outcome = parallel_map(options.reps, options.workers, [&](std::size_t r) {
        const PointPattern p = generators::sample(gen, rng.child(r));
        const Point c = p.window().center();
        std::vector<double> row;
        for (double s : scales) {
            row.push_back(eval_linear_statistic(p, TestFunction::tent(p.dimension(), s), c));
        }
        double count = 0.0;
        for (const auto& x : p.points()) {
            count += euclidean_norm(detail::displacement(p.metric(), x, c), p.dimension()) < 1.0 ? 1.0 : 0.0;
        }
        row.push_back(count);
        return row;
    });
    std::vector<std::vector<double>> values(scales.size(), std::vector<double>(options.reps));
    std::vector<double> counts(options.reps);
    for (std::size_t r = 0; r < options.reps; ++r) {
        for (std::size_t i = 0; i < scales.size(); ++i) {
            values[i][r] = outcome[r][i];
        }
        counts[r] = outcome[r].back();
    }
    ToleranceReport rep;
    rep.fluctuation = summarize(scales, std::move(values));
    std::vector<double> variances;
    for (const auto& s : rep.fluctuation.scales) {
        variances.push_back(s.variance);
    }
    rep.trend = classify_trend(scales, variances);
    const auto probe = sample_moments(1.0, counts);
    rep.count_min = static_cast<long>(*std::min_element(counts.begin(), counts.end()));
    rep.count_max = static_cast<long>(*std::max_element(counts.begin(), counts.end()));
    rep.count_mean = probe.mean;
    rep.count_dispersion = probe.mean > 0.0 ? probe.variance / probe.mean : 0.0;
    rep.rigid = probe.mean > 0.0 && rep.count_dispersion < rigid_dispersion;
    if (rep.trend != Trend::growing && rep.rigid) {
        rep.verdict = Verdict::evidence_against_tolerance;
    } else if (rep.trend == Trend::growing) {
        rep.verdict = Verdict::consistent_with_tolerance;
    } else {
        rep.verdict = Verdict::inconclusive;
    }
    return rep;
}

inline std::string replicate_csv(const ReplicateStats& s)
{
    std::ostringstream os;
    os << "scale,reps,mean,var,var_se\n";
    for (const auto& x : s.scales) {
        os << io::format_double(x.scale) << ',' << x.reps << ',' << io::format_double(x.mean) << ','
           << io::format_double(x.variance) << ',' << io::format_double(x.variance_se) << '\n';
    }
    return os.str();
}

inline std::string covariance_csv(const ReplicateStats& s)
{
    std::ostringstream os;
    os << "scale_i,scale_j,cov\n";
    for (std::size_t i = 0; i < s.scales.size(); ++i) {
        for (std::size_t j = 0; j < s.scales.size(); ++j) {
            os << io::format_double(s.scales[i].scale) << ',' << io::format_double(s.scales[j].scale) << ','
               << io::format_double(s.covariance[i][j]) << '\n';
        }
    }
    return os.str();
}

inline nlohmann::json verdict_json(const ToleranceReport& r)
{
    return {{"trend", to_string(r.trend)},
            {"kendall_tau", r.fluctuation.kendall_tau},
            {"count_probe", {{"min", r.count_min}, {"max", r.count_max}, {"mean", r.count_mean},
                             {"dispersion", r.count_dispersion}, {"rigid", r.rigid}}},
            {"verdict", to_string(r.verdict)},
            {"caveat", "heuristic"}};
}

} // namespace ppstat::diagnostics

#endif // PPSTAT_DIAGNOSTICS_HPP
