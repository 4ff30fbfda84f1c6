#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bettieq/equivalence.hpp"

using namespace bettieq;

namespace {

// Survival function of Γ(3/2, rate 1/2), i.e. chi-square with 3 degrees of
// freedom.
double gamma32_sf(double z) { return z <= 0 ? 1.0 : boost::math::gamma_q(1.5, 0.5 * z); }

double brute_ks(const std::vector<double>& a, const std::vector<double>& b)
{
    double d = 0.0;
    std::vector<double> pts = a;
    pts.insert(pts.end(), b.begin(), b.end());
    for (double t : pts) {
        const double fa = std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; }) / double(a.size());
        const double fb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; }) / double(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

template <class Fn>
ErrorKind error_kind(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::IoError;
}

std::vector<double> grid(double lo, double hi, int steps)
{
    std::vector<double> g;
    for (int i = 0; i < steps; ++i)
        g.push_back(lo + (hi - lo) * i / (steps - 1));
    return g;
}

} // namespace

// ---------------------------------------------------------------------------
// KS

TEST(KsTwoSample, IdenticalAndDisjoint)
{
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
        a.push_back(0.01 + i * 0.0195);
        b.push_back(2.01 + i * 0.0195);
    }
    EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
    EXPECT_FALSE(ks_two_sample(a, a).reject);
    EXPECT_EQ(ks_two_sample(a, b).statistic, 1.0);
    EXPECT_TRUE(ks_two_sample(a, b).reject);
    EXPECT_NEAR(ks_two_sample(a, b).critical, 1.9495 * std::sqrt(100.0 / 2500.0), 1e-15);
}

TEST(KsTwoSample, MatchesBruteForceWithTies)
{
    Rng rng(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a, b;
        const auto na = 25 + rng.below(40), nb = 25 + rng.below(40);
        for (std::size_t i = 0; i < na; ++i)
            a.push_back(static_cast<double>(rng.below(20)));
        for (std::size_t i = 0; i < nb; ++i)
            b.push_back(static_cast<double>(rng.below(22)));
        EXPECT_NEAR(ks_two_sample(a, b).statistic, brute_ks(a, b), 1e-15);
        EXPECT_EQ(ks_two_sample(a, b).statistic, ks_two_sample(b, a).statistic);
    }
}

TEST(KsTwoSample, InputErrors)
{
    EXPECT_EQ(error_kind([] { ks_two_sample({}, {1.0}); }), ErrorKind::InvalidInput);
    EXPECT_EQ(error_kind([] { ks_two_sample(std::vector<double>(10, 1.0), std::vector<double>(30, 1.0)); }),
              ErrorKind::InvalidInput);
    EXPECT_EQ(error_kind([] { ks_two_sample(std::vector<double>(30, 1.0), std::vector<double>(30, 1.0), 0.2); }),
              ErrorKind::InvalidInput);
}

TEST(KsTwoSample, SameDistributionPassesAtLevel)
{
    // Two independent Γ(3/2, rate 1/2) streams, n = m = 10⁴: the test should
    // accept in at least 99 of 100 seeded repeats.
    int accepted = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        Rng ra(rep, 1), rb(rep, 2);
        std::vector<double> a(10000), b(10000);
        for (auto& v : a)
            v = ra.gamma(1.5, 2.0);
        for (auto& v : b)
            v = rb.gamma(1.5, 2.0);
        accepted += !ks_two_sample(a, b).reject;
    }
    EXPECT_GE(accepted, 99);
}

// ---------------------------------------------------------------------------
// Excess mass and pushforward

TEST(ExcessMass, UniformSquare)
{
    const auto f = make_family("location:g=uniform,dim=2");
    const auto c = excess_mass_mc(*f, {0.0, 0.0}, {0.5, 1.0, 1.0000001, 2.0}, 1000, 1);
    EXPECT_EQ(c.values, (std::vector<double>{1.0, 1.0, 0.0, 0.0}));
    EXPECT_EQ(c.std_error, (std::vector<double>{0.0, 0.0, 0.0, 0.0}));
}

TEST(ExcessMass, RotatedNormalMatchesGammaSurvival)
{
    const auto f = make_family("rotated_normal_2d");
    const auto c = excess_mass_mc(*f, {0.4}, {1.0, 3.0, 6.0}, 100000, 17);
    EXPECT_NEAR(gamma32_sf(3.0), 0.3916, 1e-4);
    for (std::size_t j = 0; j < c.t_grid.size(); ++j)
        EXPECT_NEAR(c.values[j], gamma32_sf(c.t_grid[j]), 3.0 * c.std_error[j]) << c.t_grid[j];
}

TEST(ExcessMass, ScaleFamilyChangeOfVariables)
{
    // d = 1: f_θ(X_θ) has the law of g(X_1)/θ, so f̂_2(t) = f̂_1(2t).
    const auto f = make_family("scale:g=gaussian");
    const std::vector<double> t = {0.02, 0.05, 0.08, 0.11, 0.14, 0.17};
    std::vector<double> t2;
    for (double v : t)
        t2.push_back(2.0 * v);
    const auto c2 = excess_mass_mc(*f, {2.0}, t, 100000, 5);
    const auto c1 = excess_mass_mc(*f, {1.0}, t2, 100000, 5);
    for (std::size_t j = 0; j < t.size(); ++j)
        EXPECT_NEAR(c2.values[j], c1.values[j], 4.0 * std::hypot(c1.std_error[j], c2.std_error[j])) << t[j];
    // The curves themselves differ.
    const auto c1_same = excess_mass_mc(*f, {1.0}, t, 100000, 5);
    EXPECT_GT(max_standardized_gap(c2.values, c2.std_error, c1_same.values, c1_same.std_error), 20.0);
}

TEST(ExcessMass, DualityWithPushforward)
{
    const auto f = make_family("mass_transport");
    const Theta theta = {3.0, 1.5};
    const auto z = pushforward_samples(*f, theta, 5000, 99);
    const std::vector<double> t = {0.0, 0.01, 0.05, 0.1, 0.2, 0.3};
    const auto c = excess_mass_mc(*f, theta, t, 5000, 99);
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double below = std::count_if(z.begin(), z.end(), [&](double v) { return v < t[j]; });
        // 1 − F(t−) with the count kept in integers, so the comparison is exact.
        EXPECT_EQ(c.values[j], (5000.0 - below) / 5000.0);
    }
}

TEST(ExcessMass, CurveInvariants)
{
    const auto f = make_family("torus_vonmises:kappa=3");
    const auto c = excess_mass_mc(*f, {0.5}, grid(0.0, 0.6, 25), 2000, 4);
    EXPECT_LE(c.values[0], 1.0);
    for (std::size_t j = 0; j < c.values.size(); ++j) {
        EXPECT_GE(c.values[j], 0.0);
        if (j) {
            EXPECT_LE(c.values[j], c.values[j - 1]);
        }
    }
    EXPECT_EQ(error_kind([&] { excess_mass_mc(*f, {0.5}, {0.1}, 99, 4); }), ErrorKind::InvalidInput);
    EXPECT_EQ(error_kind([&] { excess_mass_mc(*f, {0.5}, {0.2, 0.1}, 200, 4); }), ErrorKind::InvalidInput);
    EXPECT_EQ(error_kind([] { excess_mass_mc(*make_family("radial_rho"), {1.0}, {0.1}, 200, 4); }),
              ErrorKind::InvalidParam);
}

TEST(Pushforward, RotatedNormalKsToGamma)
{
    const auto f = make_family("rotated_normal_2d");
    const auto z = pushforward_samples(*f, {std::numbers::pi / 4}, 100000, 8);
    EXPECT_LT(ks_one_sample(z, [](double v) { return 1.0 - gamma32_sf(v); }), 0.01);
}

TEST(Pushforward, ScaleFamilyTransformation)
{
    const auto f = make_family("scale:g=laplace");
    auto z1 = pushforward_samples(*f, {1.0}, 20000, 1);
    const auto z3 = pushforward_samples(*f, {3.0}, 20000, 2);
    for (auto& v : z1)
        v /= 3.0;
    EXPECT_FALSE(ks_two_sample(z1, z3).reject);
}

TEST(Pushforward, SingleDraw)
{
    const auto z = pushforward_samples(*make_family("weibull_biv"), {1.0}, 1, 3);
    ASSERT_EQ(z.size(), 1u);
    EXPECT_GE(z[0], 0.0);
}

// ---------------------------------------------------------------------------
// Betti curves

TEST(BettiCurve, SmallTLimitAndRange)
{
    const auto f = make_family("rotated_normal_2d");
    const auto curves = betti_curve(*f, {0.3}, 300, {1e-6, 0.1, 0.3, 0.5}, 1, 3, 12);
    ASSERT_EQ(curves.size(), 2u);
    EXPECT_EQ(curves[0].values[0], 1.0);
    EXPECT_EQ(curves[1].values[0], 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_GT(curves[0].values[j], 0.0);
        EXPECT_LE(curves[0].values[j], 1.0);
        EXPECT_GE(curves[1].values[j], 0.0);
    }
    EXPECT_EQ(curves[0].raw.size(), 3u);
}

TEST(BettiCurve, JobsDoNotChangeResults)
{
    const auto f = make_family("scale:g=gaussian,dim=2");
    const auto a = betti_curve(*f, {1.0}, 400, grid(0.2, 2.0, 6), 1, 6, 77, {.jobs = 1});
    const auto b = betti_curve(*f, {1.0}, 400, grid(0.2, 2.0, 6), 1, 6, 77, {.jobs = 4});
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].values, b[k].values);
        EXPECT_EQ(a[k].std_error, b[k].std_error);
        EXPECT_EQ(a[k].raw, b[k].raw);
    }
}

TEST(BettiCurve, TorusUsesRips)
{
    const auto f = make_family("torus_vonmises");
    const auto c = betti_curve(*f, {0.2}, 300, {0.5, 1.0}, 1, 2, 5);
    EXPECT_GT(c[0].values[0], c[0].values[1]);
}

TEST(BettiCurve, CapsAndBudget)
{
    const auto f = make_family("scale:g=gaussian,dim=2");
    EXPECT_EQ(error_kind([&] { betti_curve(*f, {1.0}, 500, {1.0, 20.0}, 1, 1, 1); }), ErrorKind::DegreeCapExceeded);
    EXPECT_EQ(error_kind([&] { betti_curve(*f, {1.0}, 500, {1.0, 3.0}, 1, 1, 1, {.budget = 100}); }),
              ErrorKind::BudgetExceeded);
    EXPECT_EQ(error_kind([&] { betti_curve(*f, {1.0}, 500, {2.0, 1.0}, 1, 1, 1); }), ErrorKind::InvalidInput);
}

TEST(BettiCurve, ThermodynamicScalingGapShrinks)
{
    // β_0/n at fixed t approaches its limit as n grows; on the unit square
    // the leading correction is a boundary term of order n^(-1/2).  Check
    // the trend of |b(2n) − b(n)| across three doublings.
    const auto f = make_family("location:g=uniform,dim=2");
    std::vector<double> b;
    for (std::size_t n : {500u, 1000u, 2000u, 4000u, 8000u})
        b.push_back(betti_curve(*f, {0.0, 0.0}, n, {0.4}, 0, 800000 / n, 3)[0].values[0]);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < b.size(); ++i)
        gaps.push_back(std::abs(b[i] - b[i - 1]));
    // Least-squares slope of log gap against doubling index.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double x = static_cast<double>(i), y = std::log(gaps[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    EXPECT_LT(slope, 0.0);
    EXPECT_LT(gaps.back(), gaps.front());
}

TEST(BettiCurve, RotatedNormalBoundaryGapShrinks)
{
    // Equivalent parameters share the limiting curve, but the unwrapped box
    // gives a θ-dependent boundary term.  At t = 0.4 the θ = 0 vs π/4 gap
    // should fall by about half per fourfold n (rate n^(-1/2)).
    const auto f = make_family("rotated_normal_2d");
    std::vector<double> gap, se;
    for (std::size_t n : {500u, 2000u, 8000u}) {
        const std::size_t reps = 400000 / n;
        const auto a = betti_curve(*f, {0.0}, n, {0.4}, 0, reps, 5)[0];
        const auto b = betti_curve(*f, {std::numbers::pi / 4}, n, {0.4}, 0, reps, 6)[0];
        gap.push_back(b.values[0] - a.values[0]);
        se.push_back(std::hypot(a.std_error[0], b.std_error[0]));
    }
    EXPECT_GT(gap[0], 5 * se[0]);
    EXPECT_LT(gap[1], gap[0]);
    EXPECT_LT(gap[2], gap[1] + 2 * se[2]);
    EXPECT_LT(gap[2], 0.5 * gap[0]);
}

// ---------------------------------------------------------------------------
// Compare

TEST(Compare, MassTransportIsConsistent)
{
    const auto f = make_family("mass_transport");
    CompareConfig cfg;
    cfg.seed = 2;
    cfg.n_pushforward = 50000;
    const auto rep = compare(*f, {{2.0, 2.0}, {3.0, 1.5}, {4.0, 4.0 / 3.0}}, cfg);
    EXPECT_EQ(rep.pairs.size(), 3u);
    EXPECT_EQ(rep.overall(), Verdict::EquivalentConsistent) << report_to_csv(rep);
}

TEST(Compare, ScaleFamilyIsSeparated)
{
    const auto f = make_family("scale:g=gaussian,dim=2");
    CompareConfig cfg;
    cfg.n_pushforward = 20000;
    const auto rep = compare(*f, {{1.0}, {2.0}}, cfg);
    EXPECT_EQ(rep.overall(), Verdict::Separated);
}

TEST(Compare, SelfComparison)
{
    const auto f = make_family("weibull_biv");
    CompareConfig cfg;
    cfg.n_pushforward = 1000;
    const auto rep = compare(*f, {{1.5}, {1.5}}, cfg);
    ASSERT_EQ(rep.pairs.size(), 1u);
    EXPECT_EQ(rep.pairs[0].rows[0].value, 0.0);
    EXPECT_EQ(rep.overall(), Verdict::EquivalentConsistent);
}

TEST(Compare, PermutationInvariant)
{
    const auto f = make_family("rotated_normal_2d");
    CompareConfig cfg;
    cfg.n_pushforward = 2000;
    cfg.betti_replications = 2;
    cfg.betti_n = 200;
    cfg.betti_t_grid = {0.2, 0.4};
    const auto a = compare(*f, {{0.0}, {1.0}, {0.5}}, cfg);
    const auto b = compare(*f, {{1.0}, {0.5}, {0.0}}, cfg);
    EXPECT_EQ(report_to_csv(a), report_to_csv(b));
}

TEST(Compare, Classification)
{
    EXPECT_EQ(classify(1.0, 2.0, 1.5), Verdict::EquivalentConsistent);
    EXPECT_EQ(classify(2.5, 2.0, 1.5), Verdict::Inconclusive);
    EXPECT_EQ(classify(3.5, 2.0, 1.5), Verdict::Separated);
    EXPECT_EQ(parse_verdict("separated"), Verdict::Separated);
    EXPECT_EQ(error_kind([] { compare(*make_family("weibull_biv"), {{1.0}}, {}); }), ErrorKind::InvalidInput);
}

TEST(Csv, Schemas)
{
    const auto f = make_family("rotated_normal_2d");
    const auto em = excess_mass_mc(*f, {0.5}, {1.0, 2.0}, 100, 1);
    const auto em_csv = excess_mass_to_csv({{{0.5}, em}});
    EXPECT_EQ(em_csv.substr(0, em_csv.find('\n')), "theta,t,value,stderr,n");
    EXPECT_EQ(std::count(em_csv.begin(), em_csv.end(), '\n'), 3);
    const auto bc = betti_curve(*f, {0.5}, 50, {0.2, 0.4}, 1, 2, 1);
    const auto b_csv = betti_to_csv({{{0.5}, bc}});
    EXPECT_EQ(b_csv.substr(0, b_csv.find('\n')), "theta,k,t,mean,stderr,n,reps");
    EXPECT_NE(b_csv.find("\n0.5,1,0.4,"), std::string::npos);
}
