#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <set>

#include "bettieq/random.hpp"

using namespace bettieq;

TEST(Philox, KnownAnswerZero)
{
    const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes)
{
    const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Rng, SameSeedSameStream)
{
    Rng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer)
{
    Rng a(42, 1), b(42, 2), c(43, 1);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a(), y = b(), z = c();
        same_ab += x == y;
        same_ac += x == z;
    }
    EXPECT_EQ(same_ab, 0);
    EXPECT_EQ(same_ac, 0);
}

TEST(Rng, SubstreamIsPureFunctionOfPath)
{
    Rng base(5);
    Rng drained(5);
    for (int i = 0; i < 17; ++i)
        drained();
    Rng s1 = base.substream(3), s2 = drained.substream(3);
    for (int i = 0; i < 100; ++i)
        ASSERT_EQ(s1(), s2());
}

TEST(Rng, UniformOpenInterval)
{
    Rng r(1);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BelowIsUnbiasedOnSmallRange)
{
    Rng r(9);
    std::array<int, 3> hist{};
    const int n = 300000;
    for (int i = 0; i < n; ++i)
        ++hist[r.below(3)];
    for (int h : hist)
        EXPECT_NEAR(h, n / 3.0, 5.0 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
}

TEST(Rng, NormalMoments)
{
    Rng r(11);
    const int n = 400000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}

class GammaMoments : public ::testing::TestWithParam<double> {};

TEST_P(GammaMoments, MeanAndVariance)
{
    const double shape = GetParam();
    const double scale = 0.5;
    Rng r(13);
    const int n = 300000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.gamma(shape, scale);
        ASSERT_GT(x, 0.0);
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double true_var = shape * scale * scale;
    EXPECT_NEAR(mean, shape * scale, 5.0 * std::sqrt(true_var / n));
    EXPECT_NEAR(var, true_var, 0.02 * true_var + 5.0 * true_var * std::sqrt((6.0 / shape + 2.0) / n));
}

INSTANTIATE_TEST_SUITE_P(Shapes, GammaMoments, ::testing::Values(0.3, 1.0, 1.5, 3.0, 10.0));

class VonMisesMoments : public ::testing::TestWithParam<double> {};

TEST_P(VonMisesMoments, MeanResultantLength)
{
    const double kappa = GetParam();
    Rng r(17);
    RejectionStats stats;
    const int n = 200000;
    double c = 0, s = 0;
    for (int i = 0; i < n; ++i) {
        const double a = von_mises(r, kappa, &stats);
        ASSERT_GT(a, -std::numbers::pi - 1e-15);
        ASSERT_LE(a, std::numbers::pi);
        c += std::cos(a);
        s += std::sin(a);
    }
    const double expected =
        kappa == 0.0 ? 0.0 : boost::math::cyl_bessel_i(1, kappa) / boost::math::cyl_bessel_i(0, kappa);
    EXPECT_NEAR(c / n, expected, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_GT(stats.acceptance_rate(), 0.6);
}

INSTANTIATE_TEST_SUITE_P(Kappas, VonMisesMoments, ::testing::Values(0.0, 0.5, 2.0, 8.0, 15.0));

TEST(StreamId, OrderMatters)
{
    EXPECT_NE(stream_id({1, 2}), stream_id({2, 1}));
    EXPECT_EQ(stream_id({hash_label("betti"), 3}), stream_id({hash_label("betti"), 3}));
}
