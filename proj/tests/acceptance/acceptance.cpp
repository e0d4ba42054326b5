// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when a firm requirement fails; heuristic checks still print FAIL but do not
// change it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "ppstat/cli/config.hpp"
#include "ppstat/cli/run.hpp"
#include "ppstat/core/io.hpp"
#include "ppstat/core/parallel.hpp"
#include "ppstat/diagnostics.hpp"
#include "ppstat/gaf/gaf.hpp"
#include "ppstat/generators.hpp"
#include "ppstat/matching.hpp"
#include "ppstat/percolation.hpp"
#include "support/oracles.hpp"
#include "support/patterns.hpp"

using namespace ppstat;
namespace fs = std::filesystem;
using generators::GeneratorSpec;

namespace {

// Wall-clock budgets in seconds.
constexpr double budget_matching_oracle = 120.0;
constexpr double budget_stability = 300.0;
constexpr double budget_poisson_tail = 1200.0;
constexpr double budget_fluctuation = 900.0;
constexpr double budget_gaf = 1800.0;
constexpr double budget_percolation = 900.0;

constexpr double se_multiple = 4.0;
constexpr double tail_constant_factor = 2.0;
constexpr double moment_growth_fraction = 0.8;
constexpr double variance_ratio_bound = 3.0;
constexpr double gaf_intensity_tolerance = 0.05;
constexpr double gaf_decrease_fraction = 0.8;
constexpr double palm_modulus_tolerance = 0.02;
constexpr double unique_spanning_fraction = 0.95;
constexpr double several_spanning_fraction = 0.9;
constexpr double branch_fraction = 0.99;
constexpr double chi_square_floor = 0.001;

// Supercritical radius for the unit-intensity Boolean model. The pilot in
// criterion 8 prints the spanning frequencies that back it.
constexpr double poisson_radius = 1.0;

struct Outcome {
    bool pass = true;
    bool firm = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        pass = pass && ok;
        firm = firm && ok;
        note(what + (ok ? "" : " [failed]"));
    }

    void heuristic(bool ok, const std::string& what)
    {
        pass = pass && ok;
        note(what + (ok ? "" : " [failed, heuristic]"));
    }

    void note(const std::string& what)
    {
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += what;
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

PointPattern uniform_pattern(Rng& rng, std::size_t n, int dim, double side, const Metric& metric)
{
    return PointPattern(Window::cube(dim, 0, side), metric, oracle::uniform_points(rng, n, dim, 0, side));
}

Metric metric_for(int dim, bool torus, double side)
{
    return torus ? Metric::toroidal(Window::cube(dim, 0, side)) : Metric::euclidean(dim);
}

std::size_t count_true(const std::vector<char>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1)); }

Outcome matching_oracle(int workers)
{
    constexpr std::size_t instances = 10000;
    const auto mismatch = parallel_map(instances, workers, [](std::size_t s) -> char {
        Rng rng(RngSpec{101, s});
        const int dim = 1 + static_cast<int>(s % 3);
        const bool torus = s % 4 >= 2;
        const auto metric = metric_for(dim, torus, 1.0);
        const auto red = uniform_pattern(rng, 1 + rng.below(12), dim, 1.0, metric);
        if (s % 2 == 0) {
            return matching::stable_match(red, metric).pairs != oracle::closest_pair_matching(red, nullptr, metric);
        }
        const auto blue = uniform_pattern(rng, 1 + rng.below(12), dim, 1.0, metric);
        return matching::stable_match(red, blue, metric).pairs != oracle::closest_pair_matching(red, &blue, metric);
    });
    Outcome o;
    o.require(count_true(mismatch) == 0,
              fmt("%.0f mismatches in %.0f instances (both modes, n <= 12)", double(count_true(mismatch)), instances));
    return o;
}

Outcome stability(int workers)
{
    constexpr std::size_t instances = 1000;
    struct Row {
        char stable;
        char invariant;
    };
    const auto rows = parallel_map(instances, workers, [](std::size_t s) {
        Rng rng(RngSpec{102, s});
        const int dim = 1 + static_cast<int>(s % 3);
        const std::size_t n = s < 10 ? 2000 : 1 + rng.below(2000);
        const double side = std::pow(static_cast<double>(n), 1.0 / dim);
        const auto metric = metric_for(dim, s % 4 >= 2, side);
        auto red = uniform_pattern(rng, n, dim, side, metric);
        std::optional<PointPattern> blue;
        if (s % 2 == 1) {
            blue = uniform_pattern(rng, 1 + rng.below(2000), dim, side, metric);
        }
        const auto* b = blue ? &*blue : nullptr;
        const auto m = matching::stable_match(red, b, metric);
        const bool stable = matching::verify_stability(m, red, b).stable;

        std::vector<Point> pts(red.points().begin(), red.points().end());
        for (std::size_t k = pts.size(); k > 1; --k) {
            std::swap(pts[k - 1], pts[rng.below(k)]);
        }
        const auto shuffled = red.with_points(std::move(pts));
        const bool invariant = support::as_coordinates(matching::stable_match(shuffled, b, metric), shuffled, b) ==
                               support::as_coordinates(m, red, b);
        return Row{stable, invariant};
    });
    std::size_t unstable = 0;
    std::size_t variant = 0;
    for (const auto& r : rows) {
        unstable += r.stable ? 0 : 1;
        variant += r.invariant ? 0 : 1;
    }
    Outcome o;
    o.require(unstable == 0, fmt("%.0f of %.0f outputs unstable (n up to 2000)", double(unstable), instances));
    o.require(variant == 0, fmt("%.0f permutation changes", double(variant)));
    return o;
}

bool removal_trial(std::uint64_t s)
{
    Rng rng(RngSpec{103, s});
    const auto w = Window::cube(2, 0, 10);
    const PointPattern p(w, Metric::euclidean(2), oracle::uniform_points(rng, 30, 2, 0, 10));
    const auto m = matching::stable_match(p, p.metric());
    const auto [x, y] = m.pairs[rng.below(m.pairs.size())];
    const auto rest = support::without(p, {x, y});
    auto expected = support::as_coordinates(m, p);
    expected.erase(std::make_pair(std::min(p[x], p[y]), std::max(p[x], p[y])));
    return support::as_coordinates(matching::stable_match(rest, rest.metric()), rest) == expected;
}

// Replaces a matched pair {x, y} by the pairs {x, x'} and {y, y'} with x', y'
// inserted very close to x and y; nothing else changes and H avoids all four.
bool splitting_trial(std::uint64_t s)
{
    Rng rng(RngSpec{104, s});
    const auto w = Window::cube(2, -6, 6);
    const PointPattern p(w, Metric::euclidean(2), oracle::uniform_points(rng, 30, 2, -5, 5));
    const auto m = matching::stable_match(p, p.metric());
    const auto [ix, iy] = m.pairs[rng.below(m.pairs.size())];
    const Point x = p[ix];
    const Point y = p[iy];
    const auto nearest_other = [&](const Point& v) {
        double d = v == Point{} ? std::numeric_limits<double>::infinity() : std::hypot(v[0], v[1]);
        for (const auto& u : p.points()) {
            if (u != v) {
                d = std::min(d, std::hypot(v[0] - u[0], v[1] - u[1]));
            }
        }
        return d;
    };
    const double eps = 0.2 * std::min({nearest_other(x), nearest_other(y), nearest_other(Point{})});
    const auto in_ball = [&](const Point& c) {
        for (;;) {
            const double a = rng.uniform(-1.0, 1.0);
            const double b = rng.uniform(-1.0, 1.0);
            if (a * a + b * b < 1.0) {
                return make_point({c[0] + eps * a, c[1] + eps * b});
            }
        }
    };
    const Point xp = in_ball(x);
    const Point yp = in_ball(y);
    const auto grown = support::with(p, {xp, yp});
    auto expected = support::as_coordinates(m, p);
    expected.erase(std::make_pair(std::min(x, y), std::max(x, y)));
    expected.insert(std::make_pair(std::min(x, xp), std::max(x, xp)));
    expected.insert(std::make_pair(std::min(y, yp), std::max(y, yp)));
    const auto mg = matching::stable_match(grown, grown.metric());
    if (support::as_coordinates(mg, grown) != expected) {
        return false;
    }
    const auto h = matching::compute_H(grown, mg, eps, Point{});
    for (const auto& v : {x, xp, y, yp}) {
        if (std::count(h.begin(), h.end(), grown.find(v)) != 0) {
            return false;
        }
    }
    return true;
}

bool adding_blue_trial(std::uint64_t s)
{
    Rng rng(RngSpec{105, s});
    const auto w = Window::cube(2, 0, 10);
    const PointPattern red(w, Metric::euclidean(2), oracle::uniform_points(rng, 25, 2, 0, 10));
    const PointPattern blue(w, Metric::euclidean(2), oracle::uniform_points(rng, 20, 2, 0, 10));
    const auto more_blue = support::with(blue, oracle::uniform_points(rng, 1, 2, 0, 10));
    const auto before = matching::stable_match(red, blue, red.metric());
    const auto after = matching::stable_match(red, more_blue, red.metric());
    for (std::size_t i = 0; i < red.size(); ++i) {
        if (after.red_distance[i] > before.red_distance[i]) {
            return false;
        }
    }
    return true;
}

bool removing_red_trial(std::uint64_t s)
{
    Rng rng(RngSpec{106, s});
    const auto w = Window::cube(2, 0, 10);
    const PointPattern red(w, Metric::euclidean(2), oracle::uniform_points(rng, 25, 2, 0, 10));
    const PointPattern blue(w, Metric::euclidean(2), oracle::uniform_points(rng, 20, 2, 0, 10));
    const auto fewer = support::without(red, {rng.below(red.size())});
    const auto before = matching::stable_match(red, blue, red.metric());
    const auto after = matching::stable_match(fewer, blue, red.metric());
    for (std::size_t i = 0; i < fewer.size(); ++i) {
        if (after.red_distance[i] > before.red_distance[red.find(fewer[i])]) {
            return false;
        }
    }
    return true;
}

Outcome matching_properties(int workers)
{
    constexpr std::size_t trials = 1000;
    Outcome o;
    const std::vector<std::pair<const char*, std::function<bool(std::uint64_t)>>> checks{
        {"removal", removal_trial},
        {"pair splitting", splitting_trial},
        {"adding blue", adding_blue_trial},
        {"removing red", removing_red_trial}};
    for (const auto& [name, trial] : checks) {
        const auto ok = parallel_map(trials, workers, [&](std::size_t s) -> char { return trial(s); });
        const std::size_t violations = trials - count_true(ok);
        o.require(violations == 0, std::string(name) + fmt(": %.0f violations in %.0f", double(violations), trials));
    }
    return o;
}

Outcome lattice_matchings(int workers)
{
    constexpr std::size_t seeds = 50;
    const auto torus2 = Window::cube(2, 0, 40);
    const auto longest = parallel_map(seeds, workers, [&](std::size_t s) {
        const auto p = generators::sample(generators::DoubledPerturbedLattice{}, torus2, Metric::toroidal(torus2),
                                          RngSpec{107, s});
        const auto m = matching::stable_match(p, p.metric());
        double worst = 0.0;
        for (double d : m.red_distance) {
            worst = std::max(worst, d);
        }
        return worst;
    });
    const auto torus1 = Window::cube(1, 0, 200);
    const auto longest_two = parallel_map(seeds, workers, [&](std::size_t s) {
        const auto red = generators::sample(generators::ShiftedLattice{}, torus1, Metric::toroidal(torus1),
                                            RngSpec{108, 2 * s});
        const auto blue = generators::sample(generators::ShiftedLattice{}, torus1, Metric::toroidal(torus1),
                                             RngSpec{108, 2 * s + 1});
        const auto m = matching::stable_match(red, blue, red.metric());
        double worst = 0.0;
        for (double d : m.red_distance) {
            worst = std::max(worst, d);
        }
        return worst;
    });
    const double one = *std::max_element(longest.begin(), longest.end());
    const double two = *std::max_element(longest_two.begin(), longest_two.end());
    Outcome o;
    o.require(one < 0.5, fmt("doubled lattice on 40^2 torus, 50 seeds: max distance %.4f < 0.5", one));
    o.require(two < 0.5, fmt("two-colour shifted lattices d=1, 50 seeds: max distance %.4f < 0.5", two));
    return o;
}

Outcome poisson_tail(int workers)
{
    constexpr std::size_t seeds = 50;
    const std::vector<double> sides{25.0, 50.0, 100.0};
    const std::vector<double> grid{1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0};
    std::vector<double> constants;
    std::vector<std::vector<double>> moments(sides.size());
    Outcome o;
    for (std::size_t w = 0; w < sides.size(); ++w) {
        const auto box = Window::cube(2, 0, sides[w]);
        const auto parts = parallel_map(seeds, workers, [&](std::size_t s) {
            const auto p = generators::sample_poisson(1.0, box, Metric::toroidal(box), RngSpec{109, s});
            return matching::match_stats(matching::stable_match(p, p.metric()), p, 0.0, grid);
        });
        for (const auto& part : parts) {
            moments[w].push_back(part.moment_d);
        }
        const auto pooled = matching::pool_stats(parts, grid);
        double c = 0.0;
        for (const auto& [r, tail] : pooled.tail) {
            c = std::max(c, r * r * tail);
        }
        constants.push_back(c);
        o.detail += fmt("C(%.0f^2)=%.4f E*X^2=%.4f; ", sides[w], c, pooled.moment_d);
    }
    o.detail.erase(o.detail.size() - 2);
    const double spread = *std::max_element(constants.begin(), constants.end()) /
                          *std::min_element(constants.begin(), constants.end());
    o.require(spread <= tail_constant_factor, fmt("(a) sup r^2 P*(X>r) over r in [1,8] varies by factor %.3f <= 2", spread));
    std::size_t growing = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
        growing += moments[0][s] < moments[1][s] && moments[1][s] < moments[2][s] ? 1 : 0;
    }
    const double fraction = static_cast<double>(growing) / static_cast<double>(seeds);
    o.heuristic(fraction >= moment_growth_fraction,
              fmt("(b, heuristic) E*X^2 strictly increasing with window in %.0f of 50 seed triples (%.2f >= 0.8)",
                  double(growing), fraction));
    return o;
}

Outcome fluctuations(int workers)
{
    Outcome o;
    const auto box = Window::cube(2, 0, 42);
    const auto poisson = diagnostics::estimate_fluctuation(GeneratorSpec{generators::Poisson{1.0}, box, Metric::euclidean(2)},
                                                           {5.0, 10.0, 20.0}, 400, RngSpec{110, 0}, {workers, {}, {}});
    const double integral = oracle::tent_square_integral_2d(1.0);
    for (const auto& s : poisson.scales) {
        const double expected = integral * s.scale * s.scale;
        o.require(std::fabs(s.variance - expected) < se_multiple * s.variance_se,
                  fmt("(a) Poisson scale %.0f: var %.2f vs Campbell %.2f", s.scale, s.variance, expected));
    }

    const GeneratorSpec perturbed{generators::PerturbedLattice{generators::Perturbation::gaussian(1.0), false, std::nullopt},
                                  Window::cube(2, 0, 84), Metric::euclidean(2)};
    const auto stats =
        diagnostics::estimate_fluctuation(perturbed, {5.0, 10.0, 20.0, 40.0}, 200, RngSpec{111, 0}, {workers, {}, {}});
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& s : stats.scales) {
        lo = std::min(lo, s.variance);
        hi = std::max(hi, s.variance);
    }
    o.require(hi / lo <= variance_ratio_bound, fmt("(b) perturbed lattice var max/min %.3f <= 3", hi / lo));

    std::size_t nonzero = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = generators::sample_shifted_lattice(Window::cube(1, -40, 40), RngSpec{112, s});
        for (long n : {1L, 5L, 17L, 40L}) {
            nonzero += diagnostics::n1_statistic(p, n) != 0 ? 1 : 0;
        }
    }
    o.require(nonzero == 0, fmt("(c) shifted lattice N_n nonzero %.0f times", double(nonzero)));

    for (long n : {5L, 20L}) {
        const auto x = parallel_map(10000, workers, [&](std::size_t r) {
            const auto p = generators::sample_poisson(1.0, Window::cube(1, -n - 2.0, n + 2.0), RngSpec{113, r});
            return static_cast<double>(diagnostics::n1_statistic(p, n));
        });
        const auto m = diagnostics::sample_moments(static_cast<double>(n), x);
        o.require(std::fabs(m.variance - 2.0 * n) < se_multiple * m.variance_se,
                  fmt("(c) Poisson n=%.0f: Var N_n %.2f vs %.0f", double(n), m.variance, 2.0 * n));
    }

    const auto y = generators::Perturbation::gaussian(1.0);
    const auto k = diagnostics::transport_bounds(y);
    for (long n : {5L, 20L, 50L}) {
        const auto x = parallel_map(2000, workers, [&](std::size_t r) {
            const auto p = generators::sample(generators::PerturbedLattice{y, false, std::nullopt},
                                              Window::cube(1, -n - 10.0, n + 10.0), Metric::euclidean(1), RngSpec{114, r});
            return std::fabs(static_cast<double>(diagnostics::n1_statistic(p, n)));
        });
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        o.require(mean <= 2.0 * k.plus + 2.0 * k.minus,
                  fmt("(c) perturbed n=%.0f: E|N_n| %.3f <= 2K+ + 2K- = %.3f", double(n), mean, 2.0 * (k.plus + k.minus)));
    }
    return o;
}

Outcome gaf_suite(int workers)
{
    Outcome o;
    constexpr double rho = 5.0;
    struct Row {
        char agree;
        double count;
    };
    const auto rows = parallel_map(500, workers, [&](std::size_t r) {
        const auto z = gaf::sample_gaf_planar(rho, RngSpec{115, r});
        const auto c = gaf::count_zeros_argument_principle(z.series, rho);
        int inside = 0;
        for (const auto& p : z.pattern.points()) {
            inside += std::hypot(p[0], p[1]) < c.radius ? 1 : 0;
        }
        return Row{c.count == inside, static_cast<double>(z.pattern.size())};
    });
    std::size_t mismatches = 0;
    double total = 0.0;
    for (const auto& r : rows) {
        mismatches += r.agree ? 0 : 1;
        total += r.count;
    }
    o.require(mismatches == 0, fmt("root count vs argument principle: %.0f mismatches in 500", double(mismatches)));
    const double intensity = total / 500.0 / (M_PI * rho * rho);
    o.require(std::fabs(intensity * M_PI - 1.0) <= gaf_intensity_tolerance,
              fmt("intensity %.5f vs 1/pi = %.5f", intensity, 1.0 / M_PI));

    const GeneratorSpec gen{generators::GafPlanar{}, Window::cube(2, -8, 8), Metric::euclidean(2)};
    std::size_t decreasing = 0;
    for (std::uint64_t b = 0; b < 20; ++b) {
        const auto s = diagnostics::estimate_fluctuation(gen, {4.0, 6.0, 8.0}, 100, RngSpec{116, b}, {workers, {}, {}});
        decreasing += s.scales[0].variance > s.scales[1].variance && s.scales[1].variance > s.scales[2].variance ? 1 : 0;
    }
    o.require(static_cast<double>(decreasing) >= gaf_decrease_fraction * 20.0,
              fmt("linear statistic variance decreasing over scales 4,6,8 in %.0f of 20 batches", double(decreasing)));

    std::size_t missing = 0;
    for (std::uint64_t r = 0; r < 200; ++r) {
        missing += gaf::sample_gaf_hyperbolic(0.8, RngSpec{117, r}, true).pattern.contains_point(Point{}) ? 0 : 1;
    }
    o.require(missing == 0, fmt("hyperbolic Palm zero at origin missing in %.0f of 200", double(missing)));

    double sum = 0.0;
    for (std::uint64_t r = 0; r < 10000; ++r) {
        sum += std::abs(gaf::hyperbolic_series(8, RngSpec{118, r}, true).coefficient(1));
    }
    const double mean = sum / 10000.0;
    const double target = 0.75 * std::sqrt(M_PI);
    o.require(std::fabs(mean - target) <= palm_modulus_tolerance * target,
              fmt("Palm E|c1| %.5f vs (3/4)sqrt(pi) = %.5f", mean, target));
    return o;
}

Outcome percolation_suite(int workers)
{
    using percolation::SpanMode;
    Outcome o;
    const auto mismatch = parallel_map(1000, workers, [](std::size_t s) -> char {
        Rng rng(RngSpec{119, s});
        const int dim = 1 + static_cast<int>(s % 3);
        const std::size_t n = 1 + rng.below(1000);
        const double side = std::pow(static_cast<double>(n), 1.0 / dim);
        const auto p = uniform_pattern(rng, n, dim, side, Metric::euclidean(dim));
        const double radius = rng.uniform(0.2, 0.8);
        return oracle::canonical_labels(percolation::build_boolean_model(p, radius).id) !=
               oracle::canonical_labels(oracle::bfs_components(p, radius));
    });
    o.require(count_true(mismatch) == 0, fmt("union-find vs BFS: %.0f mismatches in 1000", double(count_true(mismatch))));

    const auto box60 = Window::cube(2, 0, 60);
    const auto unique_spanning = [&](double radius, std::size_t runs, std::uint64_t stream) {
        const auto ok = parallel_map(runs, workers, [&](std::size_t s) -> char {
            const auto p = generators::sample_poisson(1.0, box60, RngSpec{stream, s});
            return percolation::count_spanning_clusters(percolation::build_boolean_model(p, radius),
                                                        SpanMode::touch_two_opposite) == 1;
        });
        return static_cast<double>(count_true(ok)) / static_cast<double>(runs);
    };
    std::string pilot = "pilot (20 runs):";
    for (double r : {0.5, 0.6, 0.7, 0.8, 1.0}) {
        pilot += fmt(" R=%.1f:%.2f", r, unique_spanning(r, 20, 120));
    }
    o.detail = pilot;
    const double unique = unique_spanning(poisson_radius, 200, 121);
    o.require(unique >= unique_spanning_fraction,
              fmt("Poisson R=%.1f on 60^2: exactly one spanning cluster in %.3f of 200", poisson_radius, unique));

    const auto box40 = Window::cube(2, 0, 40);
    const auto several = parallel_map(200, workers, [&](std::size_t s) -> char {
        const auto p = generators::sample(generators::ColumnDeletedStack{}, box40, Metric::euclidean(2), RngSpec{122, s});
        return percolation::count_spanning_clusters(percolation::build_boolean_model(p, 2.0), SpanMode::touch_two_opposite,
                                                    0) >= 2;
    });
    const double frac = static_cast<double>(count_true(several)) / 200.0;
    o.require(frac >= several_spanning_fraction,
              fmt("column-deleted p=1/2 R=2 on 40^2: >= 2 horizontal spanning clusters in %.3f of 200", frac));

    struct Ergodic {
        generators::Model model;
        double radius;
    };
    const std::vector<Ergodic> models{
        {generators::Poisson{1.0}, poisson_radius},
        {generators::PerturbedLattice{generators::Perturbation::gaussian(0.5), false, std::nullopt}, 0.75},
        {generators::SitePercolation{0.75}, 0.6}};
    std::size_t within = 0;
    std::size_t runs = 0;
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto ok = parallel_map(200, workers, [&](std::size_t s) -> char {
            const auto p = generators::sample(models[k].model, box60, Metric::euclidean(2), RngSpec{123 + k, s});
            return percolation::count_m_branches(percolation::build_boolean_model(p, models[k].radius), p, box60.center(),
                                                 5.0) <= 2;
        });
        within += count_true(ok);
        runs += ok.size();
    }
    const double branch = static_cast<double>(within) / static_cast<double>(runs);
    o.require(branch >= branch_fraction, fmt("M-branch count in {0,1,2} in %.4f of %.0f runs (M=5)", branch, double(runs)));
    return o;
}

Outcome palm_suite(int workers)
{
    Outcome o;
    const GeneratorSpec gen{generators::Poisson{1.0}, Window::cube(2, -8, 8), Metric::euclidean(2)};
    diagnostics::PalmSampler sampler(gen, RngSpec{126, 1});
    constexpr std::size_t reps = 10000;
    constexpr double ball = 2.0;
    const auto palm = parallel_map(reps, workers, [&](std::size_t r) {
        const auto p = sampler.sample(RngSpec{127, r});
        long c = 0;
        for (const auto& x : p.points()) {
            c += std::hypot(x[0], x[1]) < ball ? 1 : 0;
        }
        return c;
    });
    Rng direct(RngSpec{128, 0});
    std::vector<long> reference;
    for (std::size_t r = 0; r < reps; ++r) {
        reference.push_back(1 + static_cast<long>(direct.poisson(M_PI * ball * ball)));
    }
    const auto chi = diagnostics::chi_square_two_sample(palm, reference);
    o.require(chi.p_value > chi_square_floor, fmt("Poisson Palm ball count vs 1 + Poisson(4pi): chi-square p = %.4f", chi.p_value));

    const GeneratorSpec lattice{generators::ShiftedLattice{}, Window::cube(2, 0, 12), Metric::euclidean(2)};
    diagnostics::PalmSampler lattice_sampler(lattice, RngSpec{129, 1});
    std::size_t wrong = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
        const auto p = lattice_sampler.sample(RngSpec{130, r});
        const auto& b = p.window().bounds();
        std::vector<Point> expected;
        for (double x = std::ceil(b[0].lo); x < b[0].hi; x += 1.0) {
            for (double y = std::ceil(b[1].lo); y < b[1].hi; y += 1.0) {
                expected.push_back(make_point({x, y}));
            }
        }
        std::vector<Point> snapped;
        bool on_lattice = true;
        for (const auto& x : p.points()) {
            on_lattice = on_lattice && std::fabs(x[0] - std::round(x[0])) < 1e-9 && std::fabs(x[1] - std::round(x[1])) < 1e-9;
            snapped.push_back(make_point({std::round(x[0]), std::round(x[1])}));
        }
        wrong += on_lattice && p.with_points(snapped) == p.with_points(expected) ? 0 : 1;
    }
    o.require(wrong == 0, fmt("shifted-lattice Palm support differs from the re-rooted lattice in %.0f of 1000", double(wrong)));
    return o;
}

Outcome reproducibility(int workers)
{
    Outcome o;
    const auto root = fs::temp_directory_path() / ("ppstat-acceptance-" + std::to_string(::getpid()));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(PPSTAT_CONFIG_DIR)) {
        if (e.path().extension() == ".json") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::size_t differing = 0;
    for (const auto& f : files) {
        const auto config = cli::config_from_string(io::read_text_file(f.string()));
        std::vector<std::vector<std::pair<std::string, std::string>>> runs;
        for (int k = 0; k < 2; ++k) {
            const auto dir = root / (f.stem().string() + "-" + std::to_string(k));
            const auto m = cli::run(config, cli::RunOptions{dir.string(), workers, 1.0, std::nullopt});
            std::vector<std::pair<std::string, std::string>> sums;
            for (const auto& out : m.outputs) {
                sums.emplace_back(out.file, cli::sha256_hex(io::read_text_file((dir / out.file).string())));
            }
            runs.push_back(std::move(sums));
        }
        differing += runs[0] == runs[1] && !runs[0].empty() ? 0 : 1;
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    o.require(!files.empty() && differing == 0,
              fmt("%.0f configs re-run twice, %.0f with differing checksums", double(files.size()), double(differing)));
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance run"};
    int workers = 1;
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        const char* name;
        std::function<Outcome(int)> run;
        double budget;
    };
    const std::vector<Criterion> criteria{
        {"matching oracle equivalence", matching_oracle, budget_matching_oracle},
        {"stability and uniqueness", stability, budget_stability},
        {"matching properties", matching_properties, 0.0},
        {"lattice matchings", lattice_matchings, 0.0},
        {"Poisson matching tail", poisson_tail, budget_poisson_tail},
        {"fluctuation diagnostics", fluctuations, budget_fluctuation},
        {"GAF zeros", gaf_suite, budget_gaf},
        {"percolation", percolation_suite, budget_percolation},
        {"Palm sampling", palm_suite, 0.0},
        {"reproducibility", reproducibility, 0.0}};

    int failed = 0;
    int firm_failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto& c = criteria[k];
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(workers);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(start);
        if (c.budget > 0.0) {
            o.require(elapsed < c.budget, fmt("%.1f s within %.0f s", elapsed, c.budget));
        } else {
            o.note(fmt("%.1f s", elapsed));
        }
        failed += o.pass ? 0 : 1;
        firm_failures += o.firm ? 0 : 1;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed, %d on firm requirements\n", failed, criteria.size(), firm_failures);
    return firm_failures == 0 ? 0 : 1;
}
