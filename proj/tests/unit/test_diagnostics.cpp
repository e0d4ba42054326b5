#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "ppstat/diagnostics.hpp"
#include "support/oracles.hpp"

using namespace ppstat;
using namespace ppstat::diagnostics;
using generators::GeneratorSpec;

namespace {

PointPattern planar(std::vector<Point> pts, double half = 10.0)
{
    return PointPattern(Window::cube(2, -half, half), Metric::euclidean(2), std::move(pts));
}

GeneratorSpec poisson_box(double side, int dim = 2)
{
    return {generators::Poisson{1.0}, Window::cube(dim, 0, side), Metric::euclidean(dim)};
}

} // namespace

TEST(TestFunction, ProfileValues)
{
    const auto tf = TestFunction::tent(2, 4.0);
    EXPECT_EQ(tf(make_point({0.0, 0.0})), 1.0);
    EXPECT_EQ(tf(make_point({2.0, 0.0})), 1.0);
    EXPECT_DOUBLE_EQ(tf(make_point({3.0, 0.0})), 0.5);
    EXPECT_EQ(tf(make_point({0.0, 4.0})), 0.0);
    EXPECT_EQ(tf(make_point({5.0, 5.0})), 0.0);
    const auto ind = TestFunction::indicator(3.0);
    EXPECT_EQ(ind(make_point({-3.0})), 0.0);
    EXPECT_EQ(ind(make_point({3.0})), 1.0);
    EXPECT_EQ(ind(make_point({-2.999})), 1.0);
}

TEST(TestFunction, LipschitzAndSupport)
{
    Rng rng(RngSpec{1, 0});
    const auto tf = TestFunction::tent(2, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const Point a = make_point({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
        const Point b = make_point({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
        EXPECT_LE(std::fabs(tf(a) - tf(b)), TestFunction::lipschitz * std::hypot(a[0] - b[0], a[1] - b[1]) + 1e-15);
        if (std::hypot(a[0], a[1]) >= 1.0) {
            EXPECT_EQ(tf(a), 0.0);
        }
        if (std::hypot(a[0], a[1]) <= 0.5) {
            EXPECT_EQ(tf(a), 1.0);
        }
    }
}

TEST(LinearStatistic, Examples)
{
    const Point c = make_point({1.0, -1.0});
    const auto plateau = planar({make_point({1.5, -1.0}), make_point({0.0, -1.5}), make_point({1.0, 0.5})});
    EXPECT_EQ(eval_linear_statistic(plateau, TestFunction::tent(2, 4.0), c), 3.0);
    const auto edge = planar({make_point({4.0, -1.0})});
    EXPECT_DOUBLE_EQ(eval_linear_statistic(edge, TestFunction::tent(2, 4.0), c), 0.5);
    const auto far = planar({make_point({6.0, -1.0})});
    EXPECT_EQ(eval_linear_statistic(far, TestFunction::tent(2, 4.0), c), 0.0);
}

TEST(LinearStatistic, SupportMustFit)
{
    const auto p = planar({make_point({0.0, 0.0})});
    EXPECT_THROW((void)eval_linear_statistic(p, TestFunction::tent(2, 10.5), Point{}), std::invalid_argument);
    EXPECT_NO_THROW((void)eval_linear_statistic(p, TestFunction::tent(2, 10.0), Point{}));
    EXPECT_THROW((void)eval_linear_statistic(p, TestFunction::tent(1, 1.0), Point{}), std::invalid_argument);
}

TEST(LinearStatistic, TorusWrapsAroundTheCentre)
{
    const auto w = Window::cube(2, 0, 10);
    const PointPattern p(w, Metric::toroidal(w), {make_point({9.5, 0.5})});
    EXPECT_EQ(eval_linear_statistic(p, TestFunction::tent(2, 4.0), Point{}), 1.0);
    EXPECT_THROW((void)eval_linear_statistic(p, TestFunction::tent(2, 5.5), Point{}), std::invalid_argument);
}

TEST(LinearStatistic, AdditiveUnderSuperposition)
{
    const auto w = Window::cube(2, 0, 20);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto a = generators::sample_poisson(0.5, w, Metric::euclidean(2), RngSpec{2, 2 * s});
        const auto b = generators::sample_poisson(0.5, w, Metric::euclidean(2), RngSpec{2, 2 * s + 1});
        const auto tf = TestFunction::tent(2, 1.0 + static_cast<double>(s % 9));
        const double sum = eval_linear_statistic(a, tf, w.center()) + eval_linear_statistic(b, tf, w.center());
        EXPECT_NEAR(eval_linear_statistic(superpose(a, b), tf, w.center()), sum, 1e-12 * std::max(1.0, sum));
    }
}

TEST(LinearStatistic, PlateauMonotoneInScale)
{
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(RngSpec{3, s});
        const auto p = planar(oracle::uniform_points(rng, 20, 2, -2, 2));
        double last = 0.0;
        for (double n = 6.0; n <= 10.0; n += 0.5) {
            const double v = eval_linear_statistic(p, TestFunction::tent(2, n), Point{});
            EXPECT_GE(v, last);
            last = v;
        }
    }
}

TEST(Moments, StandardErrorShrinksWithReplicates)
{
    std::vector<double> x;
    Rng rng(RngSpec{4, 0});
    for (int k = 0; k < 16000; ++k) {
        x.push_back(static_cast<double>(rng.poisson(20.0)));
    }
    const auto half = sample_moments(1.0, std::vector<double>(x.begin(), x.begin() + 8000));
    const auto full = sample_moments(1.0, x);
    const double ratio = (half.variance_se * half.variance_se) / (full.variance_se * full.variance_se);
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 2.5);
    EXPECT_THROW((void)sample_moments(1.0, {1.0, 2.0}), std::invalid_argument);
}

TEST(Moments, KendallTauAndTrend)
{
    EXPECT_EQ(kendall_tau({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0);
    EXPECT_EQ(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_EQ(classify_trend({1, 2, 3, 4}, {1, 2, 4, 8}), Trend::growing);
    EXPECT_EQ(classify_trend({1, 2, 3, 4}, {8, 4, 2, 1}), Trend::decaying);
    EXPECT_EQ(classify_trend({1, 2, 3, 4}, {1, 1.2, 1.1, 1.3}), Trend::bounded);
    EXPECT_EQ(classify_trend({1, 2, 3, 4}, {1, 5, 2, 3}), Trend::bounded);
    EXPECT_THROW((void)classify_trend({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
}

TEST(Fluctuation, PoissonVarianceMatchesCampbell)
{
    const double integral = oracle::tent_square_integral_2d(1.0);
    EXPECT_NEAR(integral, 11.0 * M_PI / 24.0, 1e-9);
    const double mass = 2.0 * M_PI * oracle::simpson([](double u) { return oracle::tent(u) * u; }, 0.0, 1.0, 20000);
    const auto stats = estimate_fluctuation(poisson_box(42.0), {5.0, 10.0, 20.0}, 400, RngSpec{5, 0});
    for (const auto& s : stats.scales) {
        const double r2 = s.scale * s.scale;
        EXPECT_LT(std::fabs(s.variance - integral * r2), 4.0 * s.variance_se) << "scale " << s.scale;
        EXPECT_LT(std::fabs(s.mean - mass * r2), 4.0 * s.mean_se) << "scale " << s.scale;
    }
}

TEST(Fluctuation, CovarianceIsSymmetricAndMatchesVariance)
{
    const auto stats = estimate_fluctuation(poisson_box(20.0), {2.0, 4.0, 8.0}, 200, RngSpec{6, 0});
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(stats.covariance[i][i], stats.scales[i].variance, 1e-9 * stats.scales[i].variance);
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(stats.covariance[i][j], stats.covariance[j][i]);
        }
    }
}

TEST(Fluctuation, IndependentOfWorkerCount)
{
    const auto one = estimate_fluctuation(poisson_box(20.0), {3.0, 6.0}, 120, RngSpec{7, 0}, {1, Profile::tent, {}});
    const auto four = estimate_fluctuation(poisson_box(20.0), {3.0, 6.0}, 120, RngSpec{7, 0}, {4, Profile::tent, {}});
    EXPECT_EQ(one.values, four.values);
}

TEST(Fluctuation, Preconditions)
{
    EXPECT_THROW((void)estimate_fluctuation(poisson_box(20.0), {3.0}, 99, RngSpec{}), std::invalid_argument);
    EXPECT_THROW((void)estimate_fluctuation(poisson_box(20.0), {10.5}, 100, RngSpec{}), std::invalid_argument);
}

TEST(Fluctuation, PerturbedLatticeVarianceStaysBounded)
{
    const GeneratorSpec gen{generators::PerturbedLattice{generators::Perturbation::gaussian(1.0), false, std::nullopt},
                            Window::cube(2, 0, 44), Metric::euclidean(2)};
    const auto stats = estimate_fluctuation(gen, {2.5, 5.0, 10.0, 20.0}, 150, RngSpec{8, 0});
    std::vector<double> v;
    for (const auto& s : stats.scales) {
        v.push_back(s.variance);
    }
    EXPECT_LE(*std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end()), 3.0);
}

TEST(N1, ShiftedLatticeIsZero)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto p = generators::sample_shifted_lattice(Window::cube(1, -40, 40), RngSpec{9, s});
        for (long n : {1L, 5L, 17L, 40L}) {
            EXPECT_EQ(n1_statistic(p, n), 0);
        }
    }
}

TEST(N1, Examples)
{
    const auto p = PointPattern(Window::cube(1, -5, 5), Metric::euclidean(1),
                                {make_point({-2.0}), make_point({-1.5}), make_point({0.0}), make_point({2.0})});
    EXPECT_EQ(n1_statistic(p, 2), 3 - 4);
    EXPECT_EQ(n1_statistic(p, 1), 1 - 2);
    EXPECT_THROW((void)n1_statistic(p, 6), std::invalid_argument);
    EXPECT_THROW((void)n1_statistic(p, 0), std::invalid_argument);
}

TEST(N1, PoissonVarianceIsTwoN)
{
    std::vector<double> x;
    const long n = 10;
    for (std::uint64_t r = 0; r < 10000; ++r) {
        const auto p = generators::sample_poisson(1.0, Window::cube(1, -12, 12), RngSpec{10, r});
        x.push_back(static_cast<double>(n1_statistic(p, n)));
    }
    const auto s = sample_moments(static_cast<double>(n), x);
    EXPECT_LT(std::fabs(s.variance - 2.0 * n), 4.0 * s.variance_se);
    EXPECT_LT(std::fabs(s.mean), 4.0 * s.mean_se);
}

TEST(N1, TransportBoundsForGaussian)
{
    const boost::math::normal law;
    double k = 0.0;
    for (int j = 0; j < 60; ++j) {
        k += boost::math::cdf(boost::math::complement(law, static_cast<double>(j)));
    }
    const auto bounds = transport_bounds(generators::Perturbation::gaussian(1.0));
    EXPECT_NEAR(bounds.plus, k, 1e-10);
    EXPECT_NEAR(bounds.minus, k, 1e-10);
    EXPECT_NEAR(transport_bounds(generators::Perturbation::zero()).plus, 1.0, 1e-15);
    EXPECT_THROW((void)transport_bounds(generators::Perturbation::heavy_tail(1.0)), ComputeError);
}

TEST(N1, PerturbedLatticeMeanAbsoluteIsBounded)
{
    const auto y = generators::Perturbation::gaussian(1.0);
    const auto k = transport_bounds(y);
    for (long n : {5L, 20L}) {
        std::vector<double> x;
        for (std::uint64_t r = 0; r < 2000; ++r) {
            const auto p = generators::sample(generators::PerturbedLattice{y, false, std::nullopt}, Window::cube(1, -25, 25),
                                              Metric::euclidean(1), RngSpec{11, r});
            x.push_back(std::fabs(static_cast<double>(n1_statistic(p, n))));
        }
        const auto s = sample_moments(static_cast<double>(n), x);
        EXPECT_LE(s.mean, 2.0 * k.plus + 2.0 * k.minus) << "n " << n;
    }
}

TEST(Palm, OriginIsAlwaysPresent)
{
    const auto gen = GeneratorSpec{generators::Poisson{0.2}, Window::cube(2, -10, 10), Metric::euclidean(2)};
    for (std::uint64_t r = 0; r < 200; ++r) {
        EXPECT_TRUE(palm_sample_empirical(gen, RngSpec{12, r}).contains_point(Point{}));
    }
}

TEST(Palm, ShiftedLatticeSupportIsTheIntegerLattice)
{
    const auto gen = GeneratorSpec{generators::ShiftedLattice{}, Window::cube(2, 0, 12), Metric::euclidean(2)};
    PalmSampler sampler(gen, RngSpec{13, 99});
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto p = sampler.sample(RngSpec{13, r});
        const auto& b = p.window().bounds();
        std::vector<Point> expected;
        for (double x = std::ceil(b[0].lo); x < b[0].hi; x += 1.0) {
            for (double y = std::ceil(b[1].lo); y < b[1].hi; y += 1.0) {
                expected.push_back(make_point({x, y}));
            }
        }
        std::vector<Point> snapped;
        for (const auto& x : p.points()) {
            EXPECT_NEAR(x[0], std::round(x[0]), 1e-9);
            EXPECT_NEAR(x[1], std::round(x[1]), 1e-9);
            snapped.push_back(make_point({std::round(x[0]), std::round(x[1])}));
        }
        EXPECT_EQ(p.with_points(snapped), p.with_points(expected));
    }
}

TEST(Palm, PoissonBallCountMatchesPoissonLaw)
{
    const auto gen = GeneratorSpec{generators::Poisson{1.0}, Window::cube(2, -8, 8), Metric::euclidean(2)};
    PalmSampler sampler(gen, RngSpec{14, 99});
    Rng direct(RngSpec{15, 0});
    std::vector<long> palm_counts;
    std::vector<long> reference;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        const auto p = sampler.sample(RngSpec{14, r});
        long c = 0;
        for (const auto& x : p.points()) {
            const double d = std::hypot(x[0], x[1]);
            c += d > 0.0 && d < 2.0 ? 1 : 0;
        }
        palm_counts.push_back(c);
        reference.push_back(static_cast<long>(direct.poisson(4.0 * M_PI)));
    }
    EXPECT_GT(chi_square_two_sample(palm_counts, reference).p_value, 0.001);
    EXPECT_EQ(sampler.cap_exceeded(), 0u);
}

TEST(Palm, CoreIsTheCentralHalf)
{
    const auto core = PalmSampler::core_of(Window::cube(2, 0, 10));
    EXPECT_NEAR(core.volume(), 50.0, 1e-9);
    EXPECT_NEAR(core.center()[0], 5.0, 1e-12);
    EXPECT_THROW((void)PalmSampler::core_of(Window::disc(Point{}, 1.0)), std::invalid_argument);
}

TEST(ChiSquare, Examples)
{
    std::vector<long> a;
    for (int k = 0; k < 300; ++k) {
        a.push_back(k % 4);
    }
    const auto same = chi_square_two_sample(a, a);
    EXPECT_EQ(same.statistic, 0.0);
    EXPECT_EQ(same.dof, 3);
    EXPECT_EQ(same.p_value, 1.0);
    std::vector<long> b(300, 0);
    EXPECT_LT(chi_square_two_sample(a, b).p_value, 1e-10);
}

TEST(Tolerance, ShiftedLatticeIsEvidenceAgainst)
{
    const GeneratorSpec gen{generators::ShiftedLattice{}, Window::cube(2, 0, 32), Metric::euclidean(2)};
    const auto rep = tolerance_report(gen, RngSpec{16, 0}, {120, 1, {}});
    EXPECT_EQ(rep.verdict, Verdict::evidence_against_tolerance);
    EXPECT_TRUE(rep.rigid);
    EXPECT_EQ(verdict_json(rep)["caveat"], "heuristic");
}

TEST(Tolerance, PoissonIsConsistent)
{
    const auto rep = tolerance_report(poisson_box(32.0), RngSpec{17, 0}, {120, 1, {}});
    EXPECT_EQ(rep.trend, Trend::growing);
    EXPECT_EQ(rep.verdict, Verdict::consistent_with_tolerance);
    EXPECT_FALSE(rep.rigid);
}

TEST(Tolerance, PlanarGafIsEvidenceAgainst)
{
    const GeneratorSpec gen{generators::GafPlanar{}, Window::cube(2, -8, 8), Metric::euclidean(2)};
    const auto rep = tolerance_report(gen, RngSpec{18, 0}, {100, 1, {}});
    EXPECT_EQ(rep.trend, Trend::decaying);
    EXPECT_EQ(rep.verdict, Verdict::evidence_against_tolerance);
}

TEST(Tolerance, CsvLayouts)
{
    const auto stats = estimate_fluctuation(poisson_box(20.0), {2.0, 4.0}, 100, RngSpec{19, 0});
    const auto rows = replicate_csv(stats);
    EXPECT_EQ(rows.substr(0, rows.find('\n')), "scale,reps,mean,var,var_se");
    EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 3);
    const auto cov = covariance_csv(stats);
    EXPECT_EQ(cov.substr(0, cov.find('\n')), "scale_i,scale_j,cov");
    EXPECT_EQ(std::count(cov.begin(), cov.end(), '\n'), 5);
}
