#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "bettieq/invariance.hpp"

using namespace bettieq;

namespace {

void expect_kind(ErrorKind kind, const std::function<void()>& fn)
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

const SampleDomain kPlane{{{-4.0, 4.0}, {-4.0, 4.0}}, {}};

} // namespace

TEST(Jacobian, DeterminantMatchesEigen)
{
    Rng rng(3, 0);
    for (std::size_t n = 1; n <= 5; ++n) {
        for (int t = 0; t < 20; ++t) {
            Eigen::MatrixXd m(n, n);
            std::vector<double> flat(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    m(i, j) = flat[i * n + j] = rng.normal();
            EXPECT_NEAR(determinant(flat, n), m.determinant(), 1e-12 * std::max(1.0, std::abs(m.determinant())));
        }
    }
}

TEST(Jacobian, FiniteDifferenceMatchesClosedFormOnRegistryMaps)
{
    Rng rng(11, 0);
    for (const auto& map : registry_maps()) {
        const Box box = registry_probe_box(map);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i)
            worst = std::max(worst, jacobian_det_fd(map, uniform_in(box, rng)).relative_error);
        EXPECT_LE(worst, 1e-6) << map.label;
    }
}

TEST(Jacobian, DocumentedValues)
{
    const auto maps = registry_maps();
    const auto& psi = *std::find_if(maps.begin(), maps.end(), [](auto& m) { return m.label == "weibull_psi_inverse"; });
    EXPECT_NEAR(jacobian_det_fd(psi, {1.0, 2.0}).finite_difference, 8.0, 1e-8);
    const auto& polar = *std::find_if(maps.begin(), maps.end(), [](auto& m) { return m.label == "polar_to_cartesian"; });
    EXPECT_NEAR(jacobian_det_fd(polar, {3.0, 0.4}).finite_difference, 3.0, 1e-8);
}

TEST(Jacobian, BoundaryError)
{
    const auto maps = registry_maps();
    const auto& nq = *std::find_if(maps.begin(), maps.end(), [](auto& m) { return m.label == "normal_quantile"; });
    expect_kind(ErrorKind::BoundaryError, [&] { jacobian_det_fd(nq, {1e-8, 0.5}); });
    expect_kind(ErrorKind::InvalidInput, [&] { jacobian_det_fd(nq, {0.5}); });
}

TEST(GroupActions, SampledElementsAreBijections)
{
    Rng rng(5, 0);
    const std::vector<std::pair<GroupActionSampler, Box>> actions = {
        {rotation_group(2), kPlane.box},
        {rotation_group(3), Box(3, Axis{-3.0, 3.0})},
        {rotation_group(5), Box(5, Axis{-3.0, 3.0})},
        {block_rotation_group(2, 2), Box(4, Axis{-3.0, 3.0})},
        {block_rotation_group(3, 1), Box(4, Axis{-3.0, 3.0})},
        {diagonal_group(0.2, 5.0), {{0.1, 5.0}, {0.1, 5.0}}},
    };
    for (const auto& [action, box] : actions) {
        const auto r = group_bijection_check(action, box, 200, rng);
        EXPECT_TRUE(r.pass) << action.label << " " << r.max_violation;
    }
}

TEST(GroupActions, RotationsAreOrthogonalWithUnitDeterminant)
{
    Rng rng(6, 0);
    for (std::size_t n : {2u, 3u, 4u}) {
        for (int t = 0; t < 20; ++t) {
            const auto q = detail::random_rotation(n, rng);
            Eigen::MatrixXd m(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    m(i, j) = q[i * n + j];
            EXPECT_LT((m * m.transpose() - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-12);
            EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
        }
    }
}

TEST(GroupActions, RandomRotationAngleIsUniform)
{
    // The angle of a Haar rotation in SO(2) is uniform on (−π, π].
    Rng rng(7, 0);
    std::vector<double> angles;
    for (int i = 0; i < 5000; ++i) {
        const auto q = detail::random_rotation(2, rng);
        angles.push_back(std::atan2(q[2], q[0]));
    }
    const double d = ks_one_sample(angles, [](double a) { return (a + std::numbers::pi) / kTwoPi; });
    EXPECT_LT(std::sqrt(5000.0) * d, ks_critical_constant(0.001));
}

TEST(OrbitInvariance, GaussianWeightUnderRotations)
{
    Rng rng(1, 0);
    auto h = [](const Point& z) { return normal_pdf(z[0]) * normal_pdf(z[1]); };
    const auto r = orbit_invariance_check(h, rotation_group(2), kPlane, 1000, 1e-8, rng);
    EXPECT_TRUE(r.pass) << r.max_violation;
    EXPECT_LT(r.max_violation, 1e-12);
}

TEST(OrbitInvariance, NonInvariantFunctionFailsWithWitness)
{
    Rng rng(1, 0);
    const auto r = orbit_invariance_check([](const Point& z) { return z[0]; }, rotation_group(2), kPlane, 500, 1e-8,
                                          rng);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.max_violation, 1e-7);
    EXPECT_FALSE(r.witness.empty());
}

TEST(OrbitInvariance, TooManySkipsIsDegenerate)
{
    Rng rng(2, 0);
    const SampleDomain tiny{{{0.9, 1.0}, {0.9, 1.0}},
                            [](const Point& p) { return p[0] >= 0.9 && p[0] <= 1.0 && p[1] >= 0.9 && p[1] <= 1.0; }};
    expect_kind(ErrorKind::Degenerate, [&] {
        orbit_invariance_check([](const Point& u) { return u[0] * u[1]; }, diagonal_group(0.2, 5.0), tiny, 200, 1e-8,
                               rng);
    });
}

TEST(MaximalInvariant, RadiusUnderRotationsPasses)
{
    Rng rng(4, 0);
    const auto r = maximal_invariant_check([](const Point& z) { return Point{std::hypot(z[0], z[1])}; },
                                           rotation_group(2), kPlane, 1000, 1e-8, rng);
    EXPECT_TRUE(r.pass) << r.max_violation << " " << r.witness;
}

TEST(MaximalInvariant, SpotCheckCatchesOrbitCrossing)
{
    // T = |z| + 1000·[z₁ > 0] is not invariant; the spot check may also
    // find rotations linking points with different T.
    Rng rng(4, 0);
    const auto r = maximal_invariant_check(
        [](const Point& z) { return Point{std::hypot(z[0], z[1]) + (z[0] > 0 ? 1000.0 : 0.0)}; }, rotation_group(2),
        kPlane, 500, 1e-8, rng);
    EXPECT_FALSE(r.pass);
}

TEST(ModularSum, MassTransportCurve)
{
    Rng rng(8, 0);
    for (auto [a, b] : std::vector<std::pair<double, double>>{{2, 2}, {3, 1.5}, {4, 4.0 / 3.0}, {1.25, 5}}) {
        const auto r = modular_sum_check(mass_transport_maps(a, b), {{{0.0, 10.0}}, {{0.0, 10.0}}},
                                         [](double x) { return x; }, kModularSumTol, rng);
        EXPECT_TRUE(r.pass) << a << "," << b << " " << r.max_violation;
    }
    const auto off = modular_sum_check(mass_transport_maps(2, 3), {{{0.0, 10.0}}, {{0.0, 10.0}}},
                                       [](double x) { return x; }, kModularSumTol, rng);
    EXPECT_FALSE(off.pass);
    EXPECT_NEAR(off.max_violation, 1.0 / 6.0, 1e-15);
}

TEST(ModularSum, NonlinearMapIsNotInDelta)
{
    Rng rng(9, 0);
    SmoothMap sq;
    sq.label = "x->x^2";
    sq.dim = 1;
    sq.eval = [](const Point& x) { return Point{x[0] * x[0]}; };
    sq.det = [](const Point& x) { return 2.0 * x[0]; };
    expect_kind(ErrorKind::NotInDelta, [&] {
        modular_sum_check({sq}, {{{0.5, 3.0}}}, [](double x) { return x; }, kModularSumTol, rng);
    });
    expect_kind(ErrorKind::InvalidInput, [&] { modular_sum_check({sq}, {}, [](double x) { return x; }, 1e-12, rng); });
}

TEST(ModularIntegral, RadialFibresWithSquaredCharacter)
{
    Rng rng(10, 0);
    BaseMeasure base;
    base.axes = {{0.0, kTwoPi}};
    base.weight = [](const Point&) { return 1.0; };
    for (double rho : {-0.8, 0.0, 0.5, 0.9}) {
        const auto r = modular_integral_check([rho](const Point& z) { return radial_fibre_map(rho, z[0]); },
                                              {{0.0, 10.0}}, base, [](double x) { return x * x; },
                                              kModularIntegralTol, rng);
        EXPECT_TRUE(r.pass) << rho << " " << r.max_violation;
    }
    // With the identity character the integral is ∫ sqrt((1+ρ cos z)/(2π)) dz ≠ 1.
    const auto wrong = modular_integral_check([](const Point& z) { return radial_fibre_map(0.0, z[0]); },
                                              {{0.0, 10.0}}, base, [](double x) { return x; }, kModularIntegralTol,
                                              rng);
    EXPECT_NEAR(wrong.max_violation, std::abs(std::sqrt(kTwoPi) - 1.0), 1e-9);
}

TEST(StandardChecks, EveryExpectationHolds)
{
    for (const auto& c : standard_checks()) {
        if (c.name == "haar_variant")
            continue; // covered below with explicit sample sizes
        const auto r = c.run(42);
        EXPECT_EQ(r.pass, c.expect_pass) << c.name << " " << c.family << " " << c.theta << " "
                                         << r.max_violation << " " << r.witness;
        if (!c.expect_pass) {
            EXPECT_GT(r.max_violation, 10.0 * r.tolerance) << c.name << " " << c.family;
        }
    }
}

TEST(StandardChecks, ControlValues)
{
    for (const auto& c : standard_checks()) {
        if (c.family == "control:r->2r") {
            EXPECT_NEAR(c.run(1).max_violation, 0.5, 1e-12);
        }
        if (c.family == "scale:g=gaussian") {
            EXPECT_NEAR(c.run(1).max_violation, 1.0 / (4.0 * std::sqrt(std::numbers::pi)), 1e-8);
        }
    }
}

TEST(HaarVariant, ZeroRhoDensitiesCoincide)
{
    const auto plain = make_family("radial_rho");
    const auto haar = make_family("radial_rho_haar");
    Rng rng(12, 0);
    for (int i = 0; i < 200; ++i) {
        const double x[2] = {rng.normal() * 2, rng.normal() * 2};
        EXPECT_EQ(plain->density_unchecked({0.0}, x), haar->density_unchecked({0.0}, x));
    }
}

TEST(HaarVariant, ShiftedFamilyMatchesAndWarpedControlFails)
{
    HaarOptions opt;
    opt.seed = 3;
    const auto haar = make_family("radial_rho_haar");
    for (double rho : {0.0, 0.5, 0.9}) {
        const auto r = haar_variant_check(*haar, rho, opt);
        EXPECT_TRUE(r.pass) << rho << " " << r.max_violation;
        EXPECT_LT(r.max_violation, 1e-6) << rho;
    }
    const auto warped = haar_variant_check(*make_family("radial_rho_warped"), 0.9, opt);
    EXPECT_FALSE(warped.pass);
    EXPECT_GT(warped.max_violation, 30.0);
}

TEST(HaarVariant, IndependentStreamsAgreeWithinBonferroniBound)
{
    // Max of 15 standardized gaps; z = 3.99 is the two-sided 0.001 level
    // after Bonferroni over 15 levels.
    HaarOptions opt;
    opt.common_random_numbers = false;
    const auto haar = make_family("radial_rho_haar");
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        opt.seed = seed;
        for (double rho : {0.0, 0.5}) {
            const auto r = haar_variant_check(*haar, rho, opt);
            EXPECT_LT(r.max_violation, 3.99) << seed << " " << rho;
        }
    }
    opt.seed = 1;
    EXPECT_GT(haar_variant_check(*make_family("radial_rho_warped"), 0.9, opt).max_violation, 30.0);
}

TEST(ScoreOrthogonality, ZerothMomentVanishesForEveryQuadratureFamily)
{
    // ∫ f S = d/dθ ∫ f = 0 for any normalized family.
    const std::vector<std::pair<std::string, Theta>> cases = {
        {"location:g=laplace", {0.3}}, {"scale:g=gaussian", {1.7}}, {"weibull_biv", {1.4}},
        {"torus_vonmises", {0.6}},     {"radial_rho", {0.4}},       {"mass_transport_1p", {3.0}},
    };
    for (const auto& [spec, theta] : cases) {
        const auto r = score_orthogonality_check(*make_family(spec), theta, {0}, kScoreTol);
        EXPECT_TRUE(r.pass) << spec << " " << r.max_violation;
    }
}

TEST(ScoreOrthogonality, RotatedFamilyFourthMoment)
{
    // ∫ f² dx = E[(θᵀy)⁴] under the latent law: 3 for Gaussian F and
    // 6 − (3/2) sin² 2α for unit-variance Laplace.  ∫ f² S is half its
    // α-derivative.
    const double alpha = std::numbers::pi / 8;
    ScoreOptions opt;
    opt.quad = {1e-7, 0.0, 20000};
    const auto g = score_moment(*make_family("rotated_normal_2d"), {alpha}, 1, opt);
    EXPECT_NEAR(g[0], 0.0, 1e-5);
    const auto l = score_moment(*make_family("rotated_general_d:F=laplace,dim=2"), {alpha}, 1, opt);
    EXPECT_NEAR(l[0], -1.5 * std::sin(4 * alpha), 1e-4);
}

TEST(ScoreOrthogonality, MonteCarloInHigherDimension)
{
    // Gaussian location in 3D: E_f[f S] = 0 by symmetry; MC error ~ 1e-4.
    ScoreOptions opt;
    opt.mc_samples = 200000;
    const auto v = score_moment(*make_family("location:g=gaussian,dim=3"), {0.2, -0.1, 0.5}, 1, opt);
    for (double x : v)
        EXPECT_LT(std::abs(x), 5e-4);
}

TEST(CheckCsv, Schema)
{
    CheckResult r{"orbit_invariance", "weibull_biv", "any", 1e-13, 1e-8, true, "a,b"};
    const auto csv = check_results_to_csv({r});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,family,theta,max_violation,tolerance,pass,witness");
    EXPECT_NE(csv.find("orbit_invariance,weibull_biv,any,"), std::string::npos);
    EXPECT_NE(csv.find(",true,a;b\n"), std::string::npos);
}
