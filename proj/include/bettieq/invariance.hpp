#pragma once

// Numerical verifiers for the equivalence mechanisms: orbit invariance of a
// Jacobian determinant under a group action, invariance of a candidate
// maximal invariant, modular-character sums and integrals, the Haar-shifted
// radial family, and score orthogonality ∫ f^{k+1} S = 0.
//
// Every check returns a CheckResult whose pass flag is exactly
// max_violation <= tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bettieq/equivalence.hpp"
#include "bettieq/error.hpp"
#include "bettieq/families.hpp"
#include "bettieq/io.hpp"
#include "bettieq/quadrature.hpp"
#include "bettieq/random.hpp"
#include "bettieq/special.hpp"

namespace bettieq {

using Point = std::vector<double>;
using Box = std::vector<Axis>;

struct CheckResult {
    std::string name;
    std::string family;
    std::string theta;
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string witness;

    void finish()
    {
        pass = max_violation <= tolerance;
    }
};

inline std::string format_point(const Point& p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i)
            s += ' ';
        s += format_double(p[i]);
    }
    return s + ")";
}

inline Point uniform_in(const Box& box, Rng& rng)
{
    Point p(box.size());
    for (std::size_t i = 0; i < box.size(); ++i)
        p[i] = rng.uniform(box[i].lo, box[i].hi);
    return p;
}

// ---------------------------------------------------------------------------
// Smooth maps and Jacobians

struct SmoothMap {
    std::string label;
    std::size_t dim = 1;
    std::function<Point(const Point&)> eval;
    /// Optional closed-form det J.
    std::function<double(const Point&)> det;
    /// Box on which eval is total (bounds may be infinite).
    Box domain;

    Point operator()(const Point& x) const { return eval(x); }
};

/// Determinant by Gaussian elimination with partial pivoting (row-major).
inline double determinant(std::vector<double> a, std::size_t n)
{
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c]))
                piv = r;
        if (a[piv * n + c] == 0.0)
            return 0.0;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k)
                std::swap(a[c * n + k], a[piv * n + k]);
            det = -det;
        }
        det *= a[c * n + c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (std::size_t k = c; k < n; ++k)
                a[r * n + k] -= f * a[c * n + k];
        }
    }
    return det;
}

struct JacobianDet {
    double finite_difference = 0.0;
    /// NaN when the map has no closed form.
    double closed_form = std::numeric_limits<double>::quiet_NaN();
    double relative_error = 0.0;
};

/// Central-difference Jacobian determinant with per-axis step
/// h·max(1, |x_i|).  Throws BoundaryError when a stencil point would leave
/// the map's domain.
inline JacobianDet jacobian_det_fd(const SmoothMap& map, const Point& x, double h = 1e-6)
{
    const std::size_t n = map.dim;
    if (x.size() != n)
        fail(ErrorKind::InvalidInput, "point dimension does not match map " + map.label);
    std::vector<double> jac(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        const double step = h * std::max(1.0, std::abs(x[j]));
        if (!map.domain.empty() && (x[j] - step < map.domain[j].lo || x[j] + step > map.domain[j].hi))
            fail(ErrorKind::BoundaryError, "point " + format_point(x) + " is within one step of the boundary of " +
                                               map.label);
        Point xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const Point yp = map(xp), ym = map(xm);
        for (std::size_t i = 0; i < n; ++i)
            jac[i * n + j] = (yp[i] - ym[i]) / (2.0 * step);
    }
    JacobianDet out;
    out.finite_difference = determinant(jac, n);
    if (map.det) {
        out.closed_form = map.det(x);
        out.relative_error =
            std::abs(out.finite_difference - out.closed_form) / std::max(std::abs(out.closed_form), 1e-300);
    }
    return out;
}

/// Best available det J: the closed form when present.
inline double map_det(const SmoothMap& map, const Point& x)
{
    return map.det ? map.det(x) : jacobian_det_fd(map, x).finite_difference;
}

// ---------------------------------------------------------------------------
// Group actions

struct GroupElement {
    SmoothMap forward;
    SmoothMap inverse;
};

struct GroupActionSampler {
    std::string label;
    std::size_t dim = 2;
    std::function<GroupElement(Rng&)> sample;
};

namespace detail {

inline SmoothMap linear_map(std::string label, std::vector<double> m, std::size_t n)
{
    SmoothMap s;
    s.label = std::move(label);
    s.dim = n;
    const double d = determinant(m, n);
    s.eval = [m, n](const Point& x) {
        Point y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                y[i] += m[i * n + j] * x[j];
        return y;
    };
    s.det = [d](const Point&) { return d; };
    return s;
}

/// Haar-random rotation in SO(n) by Gram-Schmidt on a Gaussian matrix
/// (rows), with one row negated if needed to make det = +1.
inline std::vector<double> random_rotation(std::size_t n, Rng& rng)
{
    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (;;) {
            for (std::size_t k = 0; k < n; ++k)
                q[i * n + k] = rng.normal();
            for (std::size_t j = 0; j < i; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    dot += q[i * n + k] * q[j * n + k];
                for (std::size_t k = 0; k < n; ++k)
                    q[i * n + k] -= dot * q[j * n + k];
            }
            double norm = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                norm += q[i * n + k] * q[i * n + k];
            norm = std::sqrt(norm);
            if (norm > 1e-8) {
                for (std::size_t k = 0; k < n; ++k)
                    q[i * n + k] /= norm;
                break;
            }
        }
    }
    if (determinant(q, n) < 0.0)
        for (std::size_t k = 0; k < n; ++k)
            q[k] = -q[k];
    return q;
}

inline std::vector<double> transpose(const std::vector<double>& m, std::size_t n)
{
    std::vector<double> t(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            t[j * n + i] = m[i * n + j];
    return t;
}

} // namespace detail

/// Uniform random rotations of R^n.
inline GroupActionSampler rotation_group(std::size_t n)
{
    return {"SO(" + std::to_string(n) + ")", n, [n](Rng& rng) {
                const auto q = detail::random_rotation(n, rng);
                return GroupElement{detail::linear_map("rotation", q, n),
                                    detail::linear_map("rotation^-1", detail::transpose(q, n), n)};
            }};
}

/// Block rotations SO(p) × SO(q) acting on R^{p+q}.
inline GroupActionSampler block_rotation_group(std::size_t p, std::size_t q)
{
    const std::size_t n = p + q;
    return {"SO(" + std::to_string(p) + ")xSO(" + std::to_string(q) + ")", n, [p, q, n](Rng& rng) {
                const auto a = detail::random_rotation(p, rng);
                const auto b = detail::random_rotation(q, rng);
                std::vector<double> m(n * n, 0.0);
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t j = 0; j < p; ++j)
                        m[i * n + j] = a[i * p + j];
                for (std::size_t i = 0; i < q; ++i)
                    for (std::size_t j = 0; j < q; ++j)
                        m[(p + i) * n + p + j] = b[i * q + j];
                return GroupElement{detail::linear_map("block rotation", m, n),
                                    detail::linear_map("block rotation^-1", detail::transpose(m, n), n)};
            }};
}

/// diag(s, 1/s) with s uniform in [lo, hi].
inline GroupActionSampler diagonal_group(double lo, double hi)
{
    return {"diag(s,1/s)", 2, [lo, hi](Rng& rng) {
                const double s = rng.uniform(lo, hi);
                return GroupElement{detail::linear_map("diag", {s, 0.0, 0.0, 1.0 / s}, 2),
                                    detail::linear_map("diag^-1", {1.0 / s, 0.0, 0.0, s}, 2)};
            }};
}

/// Largest |g(g⁻¹(y)) − y| (relative) over sampled elements and points.
inline CheckResult group_bijection_check(const GroupActionSampler& action, const Box& box, std::size_t trials,
                                         Rng& rng, double tol = 1e-9)
{
    CheckResult r{"group_bijection", "", "", 0.0, tol, false, ""};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto g = action.sample(rng);
        const Point y = uniform_in(box, rng);
        const Point back = g.forward(g.inverse(y));
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double v = std::abs(back[i] - y[i]) / std::max(1.0, std::abs(y[i]));
            if (v > r.max_violation) {
                r.max_violation = v;
                r.witness = "y=" + format_point(y);
            }
        }
    }
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Orbit and maximal-invariant checks

struct SampleDomain {
    /// Points are drawn uniformly from this finite box.
    Box box;
    /// Points outside the domain (after the group acts) are skipped; empty
    /// means everything is inside.
    std::function<bool(const Point&)> contains;

    bool inside(const Point& p) const { return !contains || contains(p); }
};

namespace detail {

inline void check_skips(std::size_t skipped, std::size_t trials, const std::string& what)
{
    if (2 * skipped > trials)
        fail(ErrorKind::Degenerate, what + ": " + std::to_string(skipped) + " of " + std::to_string(trials) +
                                        " orbit images left the domain");
}

} // namespace detail

/// max over trials of |h(g·y) − h(y)| / max(1, |h(y)|).
inline CheckResult orbit_invariance_check(const std::function<double(const Point&)>& h,
                                          const GroupActionSampler& action, const SampleDomain& domain,
                                          std::size_t n_trials, double tol, Rng& rng)
{
    CheckResult r{"orbit_invariance", "", "", 0.0, tol, false, ""};
    std::size_t skipped = 0;
    for (std::size_t t = 0; t < n_trials; ++t) {
        const Point y = uniform_in(domain.box, rng);
        const auto g = action.sample(rng);
        const Point gy = g.forward(y);
        if (!domain.inside(gy)) {
            ++skipped;
            continue;
        }
        const double hy = h(y);
        const double v = std::abs(h(gy) - hy) / std::max(1.0, std::abs(hy));
        if (v > r.max_violation || r.witness.empty()) {
            r.max_violation = std::max(r.max_violation, v);
            if (v >= r.max_violation)
                r.witness = "y=" + format_point(y);
        }
    }
    detail::check_skips(skipped, n_trials, "orbit_invariance_check");
    r.finish();
    return r;
}

struct MaximalityOptions {
    std::size_t pairs = 20;
    std::size_t elements_per_pair = 200;
    double delta = 0.1;
    double epsilon = 1e-3;
};

/// Invariance half: max componentwise |T(g·x) − T(x)| / max(1, |T(x)|).
/// Maximality spot check (heuristic, non-exhaustive): for random pairs with
/// T values further apart than δ, no sampled g may map x₁ within ε of x₂;
/// each hit counts as a violation of size 1.
inline CheckResult maximal_invariant_check(const std::function<Point(const Point&)>& T,
                                           const GroupActionSampler& action, const SampleDomain& domain,
                                           std::size_t n_trials, double tol, Rng& rng,
                                           const MaximalityOptions& mopt = {})
{
    CheckResult r{"maximal_invariant", "", "", 0.0, tol, false, ""};
    std::size_t skipped = 0;
    for (std::size_t t = 0; t < n_trials; ++t) {
        const Point x = uniform_in(domain.box, rng);
        const auto g = action.sample(rng);
        const Point gx = g.forward(x);
        if (!domain.inside(gx)) {
            ++skipped;
            continue;
        }
        const Point tx = T(x), tgx = T(gx);
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const double v = std::abs(tgx[i] - tx[i]) / std::max(1.0, std::abs(tx[i]));
            if (v > r.max_violation) {
                r.max_violation = v;
                r.witness = "x=" + format_point(x);
            }
        }
    }
    detail::check_skips(skipped, n_trials, "maximal_invariant_check");

    for (std::size_t p = 0; p < mopt.pairs; ++p) {
        const Point x1 = uniform_in(domain.box, rng), x2 = uniform_in(domain.box, rng);
        const Point t1 = T(x1), t2 = T(x2);
        double sep = 0.0;
        for (std::size_t i = 0; i < t1.size(); ++i)
            sep = std::max(sep, std::abs(t1[i] - t2[i]));
        if (sep <= mopt.delta)
            continue;
        for (std::size_t e = 0; e < mopt.elements_per_pair; ++e) {
            const Point gx = action.sample(rng).forward(x1);
            double dist = 0.0;
            for (std::size_t i = 0; i < gx.size(); ++i)
                dist = std::max(dist, std::abs(gx[i] - x2[i]));
            if (dist < mopt.epsilon) {
                r.max_violation = std::max(r.max_violation, 1.0);
                r.witness = "orbit of " + format_point(x1) + " reaches " + format_point(x2) + " with different T";
                break;
            }
        }
    }
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Modular-character checks

inline constexpr std::size_t kDeltaProbePoints = 20;
inline constexpr double kDeltaTolerance = 1e-8;

/// Checks that |det J| of `map` is constant over random points of `box`
/// (membership in Δ); returns the common value.  Throws NotInDelta.
inline double constant_jacobian(const SmoothMap& map, const Box& box, Rng& rng,
                                std::size_t probes = kDeltaProbePoints)
{
    double ref = 0.0;
    for (std::size_t i = 0; i < probes; ++i) {
        const double v = std::abs(map_det(map, uniform_in(box, rng)));
        if (i == 0) {
            ref = v;
            continue;
        }
        if (std::abs(v - ref) > kDeltaTolerance * std::max(std::abs(ref), 1e-300))
            fail(ErrorKind::NotInDelta, map.label + " has non-constant Jacobian (" + format_double(ref) + " vs " +
                                            format_double(v) + ")");
    }
    return ref;
}

/// |Σ_i Ψ(|det J_{φ_i⁻¹}|) − 1| for maps φ_i with constant Jacobian, probed
/// on each map's `probe` box.  |det J_{φ⁻¹}| = 1/|det J_φ|.
inline CheckResult modular_sum_check(const std::vector<SmoothMap>& maps, const std::vector<Box>& probe,
                                     const std::function<double(double)>& modular_character, double tol, Rng& rng)
{
    if (maps.size() != probe.size())
        fail(ErrorKind::InvalidInput, "modular_sum_check needs one probe box per map");
    CheckResult r{"modular_sum", "", "", 0.0, tol, false, ""};
    double sum = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const double inv = 1.0 / constant_jacobian(maps[i], probe[i], rng);
        sum += modular_character(inv);
        r.witness += (i ? " + " : "sum = ") + format_double(modular_character(inv));
    }
    r.max_violation = std::abs(sum - 1.0);
    r.finish();
    return r;
}

/// Base of a fibre bundle: an interval integrated adaptively, or a torus
/// integrated with a Gauss-Legendre product rule.
struct BaseMeasure {
    enum class Kind { Interval, Torus };
    Kind kind = Kind::Interval;
    Box axes;
    /// Density of μ with respect to Lebesgue measure on the base.
    std::function<double(const Point&)> weight;
    int gauss_nodes = 32;
    QuadOptions quad{1e-12, 0.0, 4000};
};

/// |∫ Ψ(|det J_{φ_z⁻¹}|) μ(dz) − 1| where `fibre_map(z)` is φ_z and `fibre`
/// is the box on which Δ-membership of each fibre map is probed.
inline CheckResult modular_integral_check(const std::function<SmoothMap(const Point&)>& fibre_map, const Box& fibre,
                                          const BaseMeasure& base,
                                          const std::function<double(double)>& modular_character, double tol,
                                          Rng& rng)
{
    CheckResult r{"modular_integral", "", "", 0.0, tol, false, ""};
    // Δ membership at a handful of base points.
    for (int i = 0; i < 8; ++i)
        constant_jacobian(fibre_map(uniform_in(base.axes, rng)), fibre, rng, 5);
    auto integrand = [&](const Point& z) {
        const SmoothMap m = fibre_map(z);
        const double inv = 1.0 / std::abs(map_det(m, uniform_in(fibre, rng)));
        return modular_character(inv) * base.weight(z);
    };
    double value;
    if (base.kind == BaseMeasure::Kind::Interval) {
        if (base.axes.size() != 1)
            fail(ErrorKind::InvalidInput, "interval base must be one-dimensional");
        value = integrate_adaptive([&](double z) { return integrand({z}); }, base.axes[0].lo, base.axes[0].hi,
                                   base.quad)
                    .value;
    } else {
        value = integrate_product_gauss(integrand, base.axes, base.gauss_nodes);
    }
    r.max_violation = std::abs(value - 1.0);
    r.witness = "integral = " + format_double(value);
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Haar-shifted radial family

struct HaarOptions {
    HaarOptions() = default;
    explicit HaarOptions(std::uint64_t s) : seed(s) {}

    std::size_t n = 100000;
    std::uint64_t seed = 1;
    std::vector<double> t_grid; // empty: 15 levels in (0, 1/(2π))
    double tol = 3.0;           // pooled standard errors
    /// Draw both samples from one stream.  The shifted sampler consumes
    /// randomness exactly like radial_rho, so f̃(X̃) = f(X) pathwise and the
    /// gap isolates the density-value law.  Off: independent streams.
    bool common_random_numbers = true;
};

/// Compares the excess-mass curve of `variant` (radial_rho_haar, or the
/// warped control) against radial_rho at the same ρ, as a maximum gap in
/// pooled standard errors.
inline CheckResult haar_variant_check(const Family& variant, double rho, const HaarOptions& opt = {})
{
    const FamilyPtr base = make_family("radial_rho");
    std::vector<double> grid = opt.t_grid;
    if (grid.empty())
        for (int j = 1; j <= 15; ++j)
            grid.push_back(j / (16.0 * kTwoPi));
    const std::uint64_t seed_a = opt.common_random_numbers ? opt.seed : mix64(opt.seed ^ hash_label("radial_rho"));
    const std::uint64_t seed_b = opt.common_random_numbers ? opt.seed : mix64(opt.seed ^ hash_label(variant.id()));
    const auto a = excess_mass_mc(*base, {rho}, grid, opt.n, seed_a);
    const auto b = excess_mass_mc(variant, {rho}, grid, opt.n, seed_b);
    CheckResult r{"haar_variant", variant.id(), format_double(rho), 0.0, opt.tol, false, ""};
    r.max_violation = max_standardized_gap(a.values, a.std_error, b.values, b.std_error);
    r.witness = "gap in pooled standard errors over " + std::to_string(grid.size()) + " levels";
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Score orthogonality

struct ScoreOptions {
    QuadOptions quad{1e-9, 0.0, 20000};
    std::size_t mc_samples = 1000000;
    std::uint64_t seed = 1;
};

/// ∫ f_θ^{k+1} S_θ dx for one k, componentwise.  Quadrature for d ≤ 2,
/// Monte Carlo E_f[f^k S] for d > 2.
inline std::vector<double> score_moment(const Family& fam, const Theta& theta, int k, const ScoreOptions& opt = {})
{
    fam.validate(theta);
    const std::size_t p = theta.size();
    const std::size_t d = fam.dim();
    std::vector<double> out(p, 0.0);
    auto integrand = [&](const double* x, std::size_t comp) {
        const double f = fam.density_unchecked(theta, x);
        if (!(f > 0.0))
            return 0.0;
        // Far tails contribute nothing, and finite-difference scores may be
        // undefined there once a neighbouring density underflows.
        const double fk1 = std::pow(f, k + 1);
        if (fk1 < 1e-250)
            return 0.0;
        return fk1 * score(fam, theta, std::span<const double>(x, d))[comp];
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < p; ++c) {
        if (d > 2) {
            Rng rng(opt.seed, stream_id({hash_label("score_mc"), static_cast<std::uint64_t>(k), c}));
            const PointCloud cloud = sample(fam, theta, opt.mc_samples, rng);
            double s = 0.0;
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const double* x = cloud.point(i).data();
                s += std::pow(fam.density_unchecked(theta, x), k) * score(fam, theta, cloud.point(i))[c];
            }
            out[c] = s / static_cast<double>(cloud.size());
            continue;
        }
        if (d == 1) {
            auto f1 = [&](double x) { return integrand(&x, c); };
            out[c] = fam.support() == SupportKind::UnitBox ? integrate_adaptive(f1, 0.0, 1.0, opt.quad).value
                                                           : integrate_real_line(f1, opt.quad).value;
            continue;
        }
        auto f2 = [&](double x, double y) {
            const double q[2] = {x, y};
            return integrand(q, c);
        };
        switch (fam.support()) {
        case SupportKind::UnitBox: out[c] = integrate_2d(f2, {0.0, 1.0}, {0.0, 1.0}, opt.quad).value; break;
        case SupportKind::Torus: out[c] = integrate_2d(f2, {0.0, kTwoPi}, {0.0, kTwoPi}, opt.quad).value; break;
        case SupportKind::PositiveOrthant: out[c] = integrate_2d(f2, {0.0, inf}, {0.0, inf}, opt.quad).value; break;
        case SupportKind::RealSpace:
            out[c] = integrate_polar(
                         [&](double r, double phi) {
                             const double q[2] = {r * std::cos(phi), r * std::sin(phi)};
                             return integrand(q, c);
                         },
                         opt.quad)
                         .value;
            break;
        }
    }
    return out;
}

/// max over k ∈ k_list and components of |∫ f^{k+1} S dx|.
inline CheckResult score_orthogonality_check(const Family& fam, const Theta& theta, const std::vector<int>& k_list,
                                             double tol, const ScoreOptions& opt = {})
{
    CheckResult r{"score_orthogonality", fam.spec(), format_theta(theta), 0.0, tol, false, ""};
    for (int k : k_list) {
        const auto v = score_moment(fam, theta, k, opt);
        for (double x : v) {
            if (std::abs(x) >= r.max_violation) {
                r.max_violation = std::abs(x);
                r.witness = "k=" + std::to_string(k) + " value=" + format_double(x);
            }
        }
    }
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Registry maps and standard checks

/// Maps with closed-form Jacobians, used by the Jacobian property tests and
/// the verify command.
inline std::vector<SmoothMap> registry_maps()
{
    std::vector<SmoothMap> maps;
    maps.push_back(detail::linear_map("identity", {1, 0, 0, 1}, 2));
    maps.push_back(detail::linear_map("diag(2,3)", {2, 0, 0, 3}, 2));
    {
        SmoothMap m;
        m.label = "weibull_psi_inverse";
        m.dim = 2;
        m.eval = [](const Point& x) { return Point{x[0] * x[0], x[1] * x[1]}; };
        m.det = [](const Point& x) { return 4.0 * x[0] * x[1]; };
        m.domain = {{0.0, 50.0}, {0.0, 50.0}};
        maps.push_back(m);
    }
    {
        SmoothMap m;
        m.label = "normal_quantile";
        m.dim = 2;
        m.eval = [](const Point& x) { return Point{normal_quantile(x[0]), normal_quantile(x[1])}; };
        m.det = [](const Point& x) {
            return 1.0 / (normal_pdf(normal_quantile(x[0])) * normal_pdf(normal_quantile(x[1])));
        };
        m.domain = {{0.0, 1.0}, {0.0, 1.0}};
        maps.push_back(m);
    }
    for (double a : {2.0, 3.0, 1.5}) {
        SmoothMap m;
        m.label = "scale_by_" + format_double(a);
        m.dim = 1;
        m.eval = [a](const Point& x) { return Point{a * x[0]}; };
        m.det = [a](const Point&) { return a; };
        maps.push_back(m);
    }
    {
        SmoothMap m;
        m.label = "polar_to_cartesian";
        m.dim = 2;
        m.eval = [](const Point& x) { return Point{x[0] * std::cos(x[1]), x[0] * std::sin(x[1])}; };
        m.det = [](const Point& x) { return x[0]; };
        m.domain = {{0.0, 50.0}, {-10.0, 10.0}};
        maps.push_back(m);
    }
    {
        SmoothMap m;
        m.label = "torus_shift";
        m.dim = 2;
        m.eval = [](const Point& x) { return Point{x[0] + 0.7, x[1] - x[0]}; };
        m.det = [](const Point&) { return 1.0; };
        maps.push_back(m);
    }
    return maps;
}

/// Interior sampling box for a registry map.
inline Box registry_probe_box(const SmoothMap& m)
{
    if (m.label == "weibull_psi_inverse")
        return {{0.05, 5.0}, {0.05, 5.0}};
    if (m.label == "normal_quantile")
        return {{0.01, 0.99}, {0.01, 0.99}};
    if (m.label == "polar_to_cartesian")
        return {{0.1, 5.0}, {0.0, kTwoPi}};
    return Box(m.dim, Axis{-5.0, 5.0});
}

/// Mass-transport pieces: x ↦ a x on the half line and x ↦ b x on the other.
inline std::vector<SmoothMap> mass_transport_maps(double a, double b)
{
    std::vector<SmoothMap> maps;
    for (double s : {a, b}) {
        SmoothMap m;
        m.label = "x->" + format_double(s) + "x";
        m.dim = 1;
        m.eval = [s](const Point& x) { return Point{s * x[0]}; };
        m.det = [s](const Point&) { return s; };
        maps.push_back(m);
    }
    return maps;
}

/// Radial fibre map r ↦ r·ξ_ρ(z), ξ_ρ² = 2π/(1 + ρ cos z).
inline SmoothMap radial_fibre_map(double rho, double z)
{
    SmoothMap m;
    const double xi = std::sqrt(kTwoPi / (1.0 + rho * std::cos(z)));
    m.label = "r->r*xi";
    m.dim = 1;
    m.eval = [xi](const Point& r) { return Point{r[0] * xi}; };
    m.det = [xi](const Point&) { return xi; };
    return m;
}

/// A named check with its expected outcome; `run(seed)` is deterministic.
struct StandardCheck {
    std::string name;
    std::string family;
    std::string theta;
    bool expect_pass;
    std::function<CheckResult(std::uint64_t)> run;
};

inline constexpr double kInvarianceTol = 1e-8;
inline constexpr double kModularSumTol = 1e-12;
inline constexpr double kModularIntegralTol = 1e-9;
inline constexpr double kScoreTol = 1e-6;

namespace detail {

inline Rng check_rng(std::uint64_t seed, const std::string& name) { return Rng(seed, stream_id({hash_label("check"), hash_label(name)})); }

inline CheckResult labelled(CheckResult r, const std::string& name, const std::string& family, const std::string& theta)
{
    r.name = name;
    r.family = family;
    r.theta = theta;
    return r;
}

} // namespace detail

inline std::vector<StandardCheck> standard_checks()
{
    std::vector<StandardCheck> out;
    auto add = [&](std::string name, std::string family, std::string theta, bool expect,
                   std::function<CheckResult(Rng&)> body) {
        out.push_back({name, family, theta, expect, [=](std::uint64_t seed) {
                           Rng rng = detail::check_rng(seed, name + "/" + family + "/" + theta);
                           return detail::labelled(body(rng), name, family, theta);
                       }});
    };
    const std::size_t trials = 2000;

    // Group invariance: in Gaussian coordinates z = Φ⁻¹(x) the Jacobian of
    // the quantile transform is the product of normal densities, which
    // rotations preserve.
    const SampleDomain plane{{{-4.0, 4.0}, {-4.0, 4.0}}, {}};
    auto gauss_det = [](const Point& z) {
        double v = 1.0;
        for (double c : z)
            v *= normal_pdf(c);
        return v;
    };
    add("orbit_invariance", "rotated_normal_2d", "any", true, [=](Rng& rng) {
        return orbit_invariance_check(gauss_det, rotation_group(2), plane, trials, kInvarianceTol, rng);
    });
    add("maximal_invariant", "rotated_normal_2d", "any", true, [=](Rng& rng) {
        return maximal_invariant_check([](const Point& z) { return Point{z[0] * z[0] + z[1] * z[1]}; },
                                       rotation_group(2), plane, trials, kInvarianceTol, rng);
    });
    add("orbit_invariance", "rotated_general_d:F=gaussian,dim=3", "any", true, [=](Rng& rng) {
        return orbit_invariance_check(gauss_det, rotation_group(3), SampleDomain{Box(3, Axis{-3.0, 3.0}), {}}, trials,
                                      kInvarianceTol, rng);
    });
    // Weibull: Ψ⁻¹(u, v) = (u², v²) has det 4uv, invariant under diag(s, 1/s).
    const SampleDomain quadrant{{{0.05, 5.0}, {0.05, 5.0}},
                                [](const Point& p) { return p[0] > 0.0 && p[1] > 0.0; }};
    add("orbit_invariance", "weibull_biv", "any", true, [=](Rng& rng) {
        return orbit_invariance_check([](const Point& u) { return 4.0 * u[0] * u[1]; }, diagonal_group(0.2, 5.0),
                                      quadrant, trials, kInvarianceTol, rng);
    });
    add("maximal_invariant", "weibull_biv", "any", true, [=](Rng& rng) {
        return maximal_invariant_check([](const Point& u) { return Point{u[0] * u[1]}; }, diagonal_group(0.2, 5.0),
                                       quadrant, trials, kInvarianceTol, rng);
    });
    // sopq: Gaussian weight with block variances is invariant under block
    // rotations; T = (|x_p|², |x_q|²).
    const SampleDomain r4{Box(4, Axis{-3.0, 3.0}), {}};
    add("orbit_invariance", "sopq_normal", "any", true, [=](Rng& rng) {
        return orbit_invariance_check(
            [](const Point& z) {
                return std::exp(-(z[0] * z[0] + z[1] * z[1]) / (2 * 0.5) - (z[2] * z[2] + z[3] * z[3]) / (2 * 0.5));
            },
            block_rotation_group(2, 2), r4, trials, kInvarianceTol, rng);
    });
    add("maximal_invariant", "sopq_normal", "any", true, [=](Rng& rng) {
        return maximal_invariant_check(
            [](const Point& z) { return Point{z[0] * z[0] + z[1] * z[1], z[2] * z[2] + z[3] * z[3]}; },
            block_rotation_group(2, 2), r4, trials, kInvarianceTol, rng);
    });
    // Controls.
    add("orbit_invariance", "control:h=u", "any", false, [=](Rng& rng) {
        return orbit_invariance_check([](const Point& u) { return u[0]; }, rotation_group(2), plane, trials,
                                      kInvarianceTol, rng);
    });
    add("maximal_invariant", "control:T=x1", "any", false, [=](Rng& rng) {
        return maximal_invariant_check([](const Point& x) { return Point{x[0]}; }, rotation_group(2), plane, trials,
                                       kInvarianceTol, rng);
    });
    add("orbit_invariance", "rotated_general_d:F=laplace,dim=2", "any", false, [=](Rng& rng) {
        const Laplace lap{1.0 / std::numbers::sqrt2};
        return orbit_invariance_check([lap](const Point& z) { return lap.pdf(z[0]) * lap.pdf(z[1]); },
                                      rotation_group(2), plane, trials, kInvarianceTol, rng);
    });

    // Modular sums for mass transport.
    for (auto [a, b] : std::vector<std::pair<double, double>>{{2, 2}, {3, 1.5}, {4, 4.0 / 3.0}, {2, 3}}) {
        const bool on_curve = std::abs(1 / a + 1 / b - 1) < 1e-12;
        add("modular_sum", "mass_transport", format_theta({a, b}), on_curve, [=](Rng& rng) {
            return modular_sum_check(mass_transport_maps(a, b), {{{0.0, 10.0}}, {{0.0, 10.0}}},
                                     [](double x) { return x; }, kModularSumTol, rng);
        });
    }

    // Modular integrals.  Radial fibres: |det J_{φ_z⁻¹}| = 1/ξ_ρ(z), Ψ(x) = x²
    // on R² with μ = dz, so the integral is ∫(1 + ρ cos z)/(2π) dz.
    for (double rho : {0.0, 0.5, 0.9}) {
        add("modular_integral", "radial_rho", format_double(rho), true, [=](Rng& rng) {
            BaseMeasure base;
            base.axes = {{0.0, kTwoPi}};
            base.weight = [](const Point&) { return 1.0; };
            return modular_integral_check([rho](const Point& z) { return radial_fibre_map(rho, z[0]); }, {{0.0, 10.0}},
                                          base, [](double x) { return x * x; }, kModularIntegralTol, rng);
        });
    }
    add("modular_integral", "torus_vonmises", "any", true, [=](Rng& rng) {
        BaseMeasure base;
        base.kind = BaseMeasure::Kind::Torus;
        base.axes = {{0.0, kTwoPi}, {0.0, kTwoPi}};
        base.weight = [](const Point&) { return 1.0 / (kTwoPi * kTwoPi); };
        return modular_integral_check(
            [](const Point& z) {
                SmoothMap m;
                m.label = "torus rotation";
                m.dim = 1;
                const double shift = z[0] + z[1];
                m.eval = [shift](const Point& y) { return Point{y[0] + shift}; };
                m.det = [](const Point&) { return 1.0; };
                return m;
            },
            {{0.0, kTwoPi}}, base, [](double x) { return x; }, kModularIntegralTol, rng);
    });
    add("modular_integral", "control:r->2r", "any", false, [=](Rng& rng) {
        BaseMeasure base;
        base.axes = {{0.0, kTwoPi}};
        base.weight = [](const Point&) { return 1.0 / kTwoPi; };
        return modular_integral_check(
            [](const Point&) {
                return detail::linear_map("r->2r", {2.0}, 1);
            },
            {{0.0, 10.0}}, base, [](double x) { return x; }, kModularIntegralTol, rng);
    });

    // Haar-shifted radial family and the warped control.
    for (double rho : {0.0, 0.5}) {
        add("haar_variant", "radial_rho_haar", format_double(rho), true, [=](Rng& rng) {
            return haar_variant_check(*make_family("radial_rho_haar"), rho, HaarOptions(rng()));
        });
    }
    add("haar_variant", "radial_rho_warped", "0.9", false, [=](Rng& rng) {
        return haar_variant_check(*make_family("radial_rho_warped"), 0.9, HaarOptions(rng()));
    });

    // Score orthogonality.
    for (double rho : {0.0, 0.3, 0.7}) {
        add("score_orthogonality", "radial_rho", format_double(rho), true, [=](Rng&) {
            return score_orthogonality_check(*make_family("radial_rho"), {rho}, {0, 1, 2, 3, 4, 5}, kScoreTol);
        });
    }
    add("score_orthogonality", "location:g=gaussian", "0.4", true, [=](Rng&) {
        return score_orthogonality_check(*make_family("location:g=gaussian"), {0.4}, {0, 1, 2, 3}, kScoreTol);
    });
    add("score_orthogonality", "mass_transport_1p", "2.5", true, [=](Rng&) {
        return score_orthogonality_check(*make_family("mass_transport_1p"), {2.5}, {0, 1, 2}, kScoreTol);
    });
    add("score_orthogonality", "scale:g=gaussian", "1", false, [=](Rng&) {
        return score_orthogonality_check(*make_family("scale:g=gaussian"), {1.0}, {1}, kScoreTol);
    });
    return out;
}

inline std::string check_results_to_csv(const std::vector<CheckResult>& results)
{
    std::string out = "check,family,theta,max_violation,tolerance,pass,witness\n";
    for (const auto& r : results) {
        std::string witness = r.witness;
        std::replace(witness.begin(), witness.end(), ',', ';');
        out += r.name + ',' + r.family + ',' + r.theta + ',' + format_double(r.max_violation) + ',' +
               format_double(r.tolerance) + ',' + (r.pass ? "true" : "false") + ',' + witness + '\n';
    }
    return out;
}

} // namespace bettieq
