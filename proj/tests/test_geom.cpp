#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bettieq/geom.hpp"
#include "bettieq/random.hpp"
#include "oracles.hpp"

using namespace bettieq;

namespace {

PointCloud random_cloud(std::uint64_t seed, std::size_t n, std::size_t dim)
{
    Rng rng(seed);
    PointCloud c(dim);
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : p)
            x = rng.uniform();
        c.push_back(p);
    }
    return c;
}

const Simplex* find(const Filtration& f, std::initializer_list<std::uint32_t> vs)
{
    const Simplex key = Simplex::from(vs, 0.0);
    for (const Simplex& s : f.simplices)
        if (s.count == key.count && std::equal(key.vertex.begin(), key.vertex.begin() + key.count, s.vertex.begin()))
            return &s;
    return nullptr;
}

} // namespace

TEST(MinEnclosingBall, Examples)
{
    EXPECT_EQ(min_enclosing_ball_radius({{0.0, 0.0}}), 0.0);
    EXPECT_EQ(min_enclosing_ball_radius({{0.0, 0.0}, {2.0, 0.0}}), 1.0);
    const std::vector<std::vector<double>> tri = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
    EXPECT_NEAR(min_enclosing_ball_radius(tri), 0.5773502691896258, 1e-12 * 0.5773502691896258);
    EXPECT_NEAR(oracle::meb_radius_grid_2d(tri), 0.5773502691896258, 1e-9);
}

TEST(MinEnclosingBall, EmptyInputRejected)
{
    try {
        min_enclosing_ball_radius({});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
}

TEST(MinEnclosingBall, ObtuseTriangleUsesLongestSide)
{
    EXPECT_DOUBLE_EQ(min_enclosing_ball_radius({{0.0, 0.0}, {4.0, 0.0}, {2.0, 0.5}}), 2.0);
}

TEST(MinEnclosingBall, DegenerateConfigurations)
{
    EXPECT_DOUBLE_EQ(min_enclosing_ball_radius({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}), 1.0);
    EXPECT_DOUBLE_EQ(min_enclosing_ball_radius({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}), 0.0);
    EXPECT_NEAR(min_enclosing_ball_radius({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}), std::sqrt(0.5), 1e-15);
    // four coplanar points in 3D
    EXPECT_NEAR(min_enclosing_ball_radius({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}), std::sqrt(0.5), 1e-15);
}

TEST(MinEnclosingBall, MatchesSubsetOracleOnRandomSets)
{
    Rng rng(2024);
    for (int trial = 0; trial < 600; ++trial) {
        const std::size_t d = 1 + rng.below(6);
        const std::size_t m = 1 + rng.below(8);
        std::vector<std::vector<double>> pts(m, std::vector<double>(d));
        for (auto& p : pts)
            for (auto& x : p)
                x = rng.normal();
        const double ref = oracle::meb_radius(pts);
        EXPECT_NEAR(min_enclosing_ball_radius(pts), ref, 1e-12 * ref + 1e-15) << "d=" << d << " m=" << m;
    }
}

TEST(MinEnclosingBall, OrderIndependent)
{
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> pts(5, std::vector<double>(3));
        for (auto& p : pts)
            for (auto& x : p)
                x = rng.uniform();
        const double a = min_enclosing_ball_radius(pts);
        std::reverse(pts.begin(), pts.end());
        EXPECT_NEAR(min_enclosing_ball_radius(pts), a, 1e-13 * a);
    }
}

TEST(Cech, TwoPoints)
{
    PointCloud c(2);
    c.push_back({0.0, 0.0});
    c.push_back({2.0, 0.0});
    const auto f1 = build_cech_filtration(c, 0.9, 1);
    EXPECT_EQ(f1.size(), 2u);
    const auto f2 = build_cech_filtration(c, 1.1, 1);
    ASSERT_EQ(f2.size(), 3u);
    EXPECT_EQ(f2.simplices[2].dim(), 1);
    EXPECT_EQ(f2.simplices[2].value, 1.0);
}

TEST(Cech, UnitSquare)
{
    PointCloud c(2);
    for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}})
        c.push_back({x, y});
    const auto f = build_cech_filtration(c, 0.8, 2);
    EXPECT_EQ(f.count(0), 4u);
    EXPECT_EQ(f.count(1), 6u);
    EXPECT_EQ(f.count(2), 4u);
    for (const Simplex& s : f.simplices) {
        std::vector<std::vector<double>> pts;
        for (auto v : s.vertices())
            pts.push_back({c.coord(v, 0), c.coord(v, 1)});
        EXPECT_NEAR(s.value, oracle::meb_radius(pts), 1e-15);
    }
    EXPECT_EQ(find(f, {0, 1})->value, 0.5);
    EXPECT_NEAR(find(f, {0, 3})->value, std::sqrt(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(find(f, {1, 2})->value, std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Cech, TorusRejected)
{
    PointCloud c(1, Metric::flat_torus({1.0}));
    c.push_back({0.5});
    try {
        build_cech_filtration(c, 0.1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedMetric);
    }
}

TEST(Rips, CollinearPoints)
{
    PointCloud c(1);
    for (double x : {0.0, 1.0, 2.0})
        c.push_back({x});
    const auto f = build_rips_filtration(c, 0.6, 2);
    EXPECT_EQ(f.count(1), 2u);
    EXPECT_EQ(f.count(2), 0u);
    EXPECT_EQ(find(f, {0, 1})->value, 0.5);
    EXPECT_EQ(find(f, {1, 2})->value, 0.5);
    EXPECT_EQ(find(f, {0, 2}), nullptr);
}

TEST(Rips, TorusWrapDistance)
{
    PointCloud c(1, Metric::flat_torus({2.0 * std::numbers::pi}));
    c.push_back({0.1});
    c.push_back({6.2});
    const auto f = build_rips_filtration(c, 0.5, 1);
    ASSERT_EQ(f.count(1), 1u);
    const double hand = std::min(6.1, 2.0 * std::numbers::pi - 6.1) / 2.0;
    EXPECT_NEAR(find(f, {0, 1})->value, hand, 1e-15);
    EXPECT_NEAR(hand, 0.0916, 1e-4);
}

TEST(Rips, DuplicatePoints)
{
    PointCloud c(2);
    c.push_back({0.3, 0.3});
    c.push_back({0.3, 0.3});
    const auto f = build_rips_filtration(c, 0.1, 1);
    EXPECT_EQ(find(f, {0, 1})->value, 0.0);
}

TEST(Filtration, MonotoneAndFacesFirst)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto c = random_cloud(seed, 25, 1 + seed % 3);
        for (const auto& f : {build_cech_filtration(c, 0.35, 3), build_rips_filtration(c, 0.35, 3)}) {
            std::map<std::vector<std::uint32_t>, std::pair<std::size_t, double>> seen;
            for (std::size_t i = 0; i < f.size(); ++i) {
                const Simplex& s = f.simplices[i];
                ASSERT_LE(s.value, f.r_max);
                ASSERT_LE(s.dim(), f.dim_max);
                ASSERT_TRUE(std::is_sorted(s.vertex.begin(), s.vertex.begin() + s.count));
                if (i) {
                    ASSERT_TRUE(filtration_less(f.simplices[i - 1], s));
                }
                for (std::uint32_t skip = 0; s.count > 1 && skip < s.count; ++skip) {
                    std::vector<std::uint32_t> face;
                    for (std::uint32_t a = 0; a < s.count; ++a)
                        if (a != skip)
                            face.push_back(s.vertex[a]);
                    auto it = seen.find(face);
                    ASSERT_NE(it, seen.end());
                    ASSERT_LE(it->second.second, s.value);
                }
                seen[{s.vertex.begin(), s.vertex.begin() + s.count}] = {i, s.value};
            }
        }
    }
}

TEST(Filtration, CechRipsInterleaving)
{
    // With Rips values at half the diameter, diam/2 <= MEB radius <= diam/sqrt(3).
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto c = random_cloud(seed, 30, 2);
        const auto cech = build_cech_filtration(c, 0.3, 2);
        const auto rips = build_rips_filtration(c, 0.3, 2);
        std::map<std::vector<std::uint32_t>, double> rv;
        for (const Simplex& s : rips.simplices)
            rv[{s.vertex.begin(), s.vertex.begin() + s.count}] = s.value;
        for (const Simplex& s : cech.simplices) {
            const auto it = rv.find({s.vertex.begin(), s.vertex.begin() + s.count});
            ASSERT_NE(it, rv.end());
            if (s.dim() == 1) {
                EXPECT_EQ(it->second, s.value);
            } else if (s.dim() == 2) {
                EXPECT_LE(it->second, s.value * (1 + 1e-12));
                EXPECT_LE(s.value, 2.0 / std::sqrt(3.0) * it->second * (1 + 1e-12));
            }
        }
    }
}

TEST(Filtration, Deterministic)
{
    const auto c = random_cloud(5, 60, 2);
    EXPECT_EQ(build_cech_filtration(c, 0.2, 2), build_cech_filtration(c, 0.2, 2));
}

TEST(Filtration, TruncationPrefix)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto c = random_cloud(seed + 50, 40, 2);
        const auto small = build_cech_filtration(c, 0.12, 2);
        const auto big = build_cech_filtration(c, 0.25, 2);
        std::vector<Simplex> prefix;
        for (const Simplex& s : big.simplices)
            if (s.value <= 0.12)
                prefix.push_back(s);
        EXPECT_EQ(prefix, small.simplices);
        EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), big.simplices.begin()));
    }
}

TEST(Filtration, BudgetExceeded)
{
    const auto c = random_cloud(1, 50, 2);
    try {
        build_rips_filtration(c, 2.0, 3, 1000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
    }
}

TEST(PointCloudCsv, RoundTrip)
{
    const auto c = random_cloud(3, 17, 3);
    const std::string text = point_cloud_to_csv(c);
    EXPECT_EQ(text.substr(0, 9), "x0,x1,x2\n");
    EXPECT_EQ(point_cloud_from_csv(text), c);
}

TEST(PointCloud, TorusCoordinatesValidated)
{
    PointCloud c(2, Metric::flat_torus({1.0, 1.0}));
    EXPECT_THROW(c.push_back({1.0, 0.5}), Error);
    EXPECT_THROW(c.push_back({0.5}), Error);
}

TEST(FiltrationCsv, RowFormat)
{
    PointCloud c(1);
    c.push_back({0.0});
    c.push_back({1.0});
    const auto text = filtration_to_csv(build_rips_filtration(c, 1.0, 1));
    EXPECT_EQ(text, "value,dim,v0,v1\n0,0,0\n0,0,1\n0.5,1,0,1\n");
}
