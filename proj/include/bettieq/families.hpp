#pragma once

// Parametric families of densities: exact evaluation, exact or rejection
// sampling, and scores.
//
// Families are created from a spec string `id` or `id:key=value,...`, e.g.
// "scale:g=gaussian,dim=2" or "rotated_general_d:F=laplace,dim=2".  A
// parameter θ is a vector of doubles; its textual form joins components with
// ':' (input also accepts ',').

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bettieq/error.hpp"
#include "bettieq/geom.hpp"
#include "bettieq/io.hpp"
#include "bettieq/quadrature.hpp"
#include "bettieq/random.hpp"
#include "bettieq/special.hpp"

namespace bettieq {

using Theta = std::vector<double>;

inline constexpr double kDensityCap = 1e300;
inline constexpr double kMinAcceptance = 0.01;

enum class SupportKind { UnitBox, RealSpace, PositiveOrthant, Torus };

inline std::string_view to_string(SupportKind s)
{
    switch (s) {
    case SupportKind::UnitBox: return "box";
    case SupportKind::RealSpace: return "real";
    case SupportKind::PositiveOrthant: return "positive";
    case SupportKind::Torus: return "torus";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// θ text form

/// Parses one scalar: a number, `pi`, a multiple such as `2pi` or `-pi`, or a
/// quotient of those (`pi/4`, `4/3`).
inline double parse_scalar(std::string_view text)
{
    const std::string t = trim(text);
    const auto slash = t.find('/');
    if (slash != std::string::npos)
        return parse_scalar(t.substr(0, slash)) / parse_scalar(t.substr(slash + 1));
    const auto pi_pos = t.find("pi");
    if (pi_pos != std::string::npos && pi_pos + 2 == t.size()) {
        const std::string head = t.substr(0, pi_pos);
        double factor = 1.0;
        if (head == "-")
            factor = -1.0;
        else if (!head.empty() && head != "+")
            factor = parse_double(head);
        return factor * std::numbers::pi;
    }
    return parse_double(t);
}

inline Theta parse_theta(std::string_view text)
{
    std::string s(text);
    std::replace(s.begin(), s.end(), ',', ':');
    Theta out;
    for (const auto& part : split(s, ':')) {
        if (trim(part).empty())
            fail(ErrorKind::InvalidInput, "empty component in parameter '" + std::string(text) + "'");
        out.push_back(parse_scalar(part));
    }
    return out;
}

inline std::string format_theta(const Theta& theta)
{
    std::string out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (i)
            out += ':';
        out += format_double(theta[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Univariate building blocks for location, scale and mass transport.

class Univariate {
public:
    virtual ~Univariate() = default;
    virtual std::string name() const = 0;
    virtual double pdf(double x) const = 0;
    virtual double sample(Rng& rng) const = 0;
    /// d/dx log pdf where it exists; NaN otherwise.
    virtual double dlog(double x) const = 0;
};

class StdNormal final : public Univariate {
public:
    std::string name() const override { return "gaussian"; }
    double pdf(double x) const override { return normal_pdf(x); }
    double sample(Rng& rng) const override { return rng.normal(); }
    double dlog(double x) const override { return -x; }
};

class UnitUniform final : public Univariate {
public:
    std::string name() const override { return "uniform"; }
    double pdf(double x) const override { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; }
    double sample(Rng& rng) const override { return rng.uniform(); }
    double dlog(double) const override { return std::numeric_limits<double>::quiet_NaN(); }
};

/// Laplace with variance 1 (scale 1/sqrt 2).
class UnitLaplace final : public Univariate {
public:
    std::string name() const override { return "laplace"; }
    double pdf(double x) const override { return law.pdf(x); }
    double sample(Rng& rng) const override { return rng.sign() * law.scale * rng.exponential(); }
    double dlog(double x) const override { return x > 0 ? -1.0 / law.scale : (x < 0 ? 1.0 / law.scale : 0.0); }
    Laplace law{1.0 / std::numbers::sqrt2};
};

class GammaDensity final : public Univariate {
public:
    GammaDensity(double shape, double scale) : shape_(shape), scale_(scale)
    {
        if (!(shape > 0.0 && scale > 0.0))
            fail(ErrorKind::InvalidParam, "gamma shape and scale must be positive");
        log_norm_ = -std::lgamma(shape) - shape * std::log(scale);
    }
    std::string name() const override { return "gamma"; }
    double pdf(double x) const override
    {
        if (x <= 0.0)
            return shape_ < 1.0 ? kDensityCap : (shape_ == 1.0 && x == 0.0 ? std::exp(log_norm_) : 0.0);
        return std::exp(log_norm_ + (shape_ - 1.0) * std::log(x) - x / scale_);
    }
    double sample(Rng& rng) const override { return rng.gamma(shape_, scale_); }
    double dlog(double x) const override { return (shape_ - 1.0) / x - 1.0 / scale_; }
    double shape() const { return shape_; }
    double scale() const { return scale_; }

private:
    double shape_, scale_, log_norm_;
};

// ---------------------------------------------------------------------------
// Family interface

class Family {
public:
    virtual ~Family() = default;

    /// Registry id, e.g. "scale".
    virtual std::string id() const = 0;
    /// Full spec including options; `make_family(spec())` rebuilds it.
    virtual std::string spec() const { return id(); }
    virtual std::size_t dim() const = 0;
    virtual SupportKind support() const = 0;
    /// Human-readable parameter domain.
    virtual std::string param_domain() const = 0;

    /// Throws InvalidParam when θ lies outside the parameter domain.
    virtual void validate(const Theta& theta) const = 0;

    /// Density at x for a validated θ; 0 outside the support, capped at 1e300.
    virtual double density_unchecked(const Theta& theta, const double* x) const = 0;

    /// Draws one point into `out` (dim() values).
    virtual void draw(const Theta& theta, Rng& rng, double* out, RejectionStats& stats) const = 0;

    /// Closed-form score if available; returns false to request finite
    /// differences.
    virtual bool score_closed_form(const Theta&, const double*, double*) const { return false; }

    Metric metric() const
    {
        if (support() == SupportKind::Torus)
            return Metric::flat_torus(std::vector<double>(dim(), kTwoPi));
        return Metric::euclidean();
    }

    bool in_support(const double* x) const
    {
        for (std::size_t i = 0; i < dim(); ++i) {
            switch (support()) {
            case SupportKind::UnitBox:
                if (!(x[i] > 0.0 && x[i] < 1.0))
                    return false;
                break;
            case SupportKind::PositiveOrthant:
                if (!(x[i] > 0.0))
                    return false;
                break;
            case SupportKind::Torus:
                if (!(x[i] >= 0.0 && x[i] < kTwoPi))
                    return false;
                break;
            case SupportKind::RealSpace:
                if (!std::isfinite(x[i]))
                    return false;
                break;
            }
        }
        return true;
    }

protected:
    static void check_arity(const Theta& theta, std::size_t n, std::string_view what)
    {
        if (theta.size() != n)
            fail(ErrorKind::InvalidParam, std::string(what) + " expects " + std::to_string(n) + " parameter value(s), got " +
                                              std::to_string(theta.size()));
        for (double t : theta)
            if (!std::isfinite(t))
                fail(ErrorKind::InvalidParam, "parameter must be finite");
    }
};

using FamilyPtr = std::shared_ptr<const Family>;

namespace detail {

inline double cap(double v) { return std::min(v, kDensityCap); }

/// Keeps a CDF value strictly inside (0, 1) so samplers never emit the box
/// boundary.
inline double open_unit(double u)
{
    constexpr double lo = 1e-300;
    constexpr double hi = 1.0 - 0x1.0p-53;
    return std::clamp(u, lo, hi);
}

inline void check_acceptance(const RejectionStats& stats, std::string_view family)
{
    if (stats.proposals >= 2000 && stats.acceptance_rate() < kMinAcceptance)
        fail(ErrorKind::RejectionStall, std::string(family) + ": rejection acceptance rate " +
                                            format_double(stats.acceptance_rate()) + " below 1% after " +
                                            std::to_string(stats.proposals) + " proposals");
}

/// Draw z ~ density (aᵀz)² φ_d(z) for a unit vector a: the component along a
/// is ±chi(3), the orthogonal part is standard normal.
inline void rotated_gaussian_latent(const std::vector<double>& a, Rng& rng, double* z)
{
    const std::size_t d = a.size();
    const double r = rng.sign() * std::sqrt(rng.gamma(1.5, 2.0));
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        z[i] = rng.normal();
        proj += a[i] * z[i];
    }
    for (std::size_t i = 0; i < d; ++i)
        z[i] += (r - proj) * a[i];
}

inline std::unique_ptr<Univariate> make_univariate(const std::string& name, double shape, double scale)
{
    if (name == "gaussian")
        return std::make_unique<StdNormal>();
    if (name == "uniform")
        return std::make_unique<UnitUniform>();
    if (name == "laplace")
        return std::make_unique<UnitLaplace>();
    if (name == "gamma")
        return std::make_unique<GammaDensity>(shape, scale);
    if (name == "exponential")
        return std::make_unique<GammaDensity>(1.0, 1.0);
    fail(ErrorKind::InvalidInput, "unknown base density '" + name + "'");
}

inline void polar(const double* x, double& r, double& phi)
{
    r = std::hypot(x[0], x[1]);
    phi = wrap_angle(std::atan2(x[1], x[0]));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Families

/// f_θ(x) = Π g(x_i − θ_i).
class LocationFamily final : public Family {
public:
    LocationFamily(std::unique_ptr<Univariate> g, std::size_t d) : g_(std::move(g)), d_(d) {}
    std::string id() const override { return "location"; }
    std::string spec() const override { return "location:g=" + g_->name() + ",dim=" + std::to_string(d_); }
    std::size_t dim() const override { return d_; }
    SupportKind support() const override { return SupportKind::RealSpace; }
    std::string param_domain() const override { return "theta in R^" + std::to_string(d_); }
    void validate(const Theta& t) const override { check_arity(t, d_, "location"); }
    double density_unchecked(const Theta& t, const double* x) const override
    {
        double v = 1.0;
        for (std::size_t i = 0; i < d_; ++i)
            v *= g_->pdf(x[i] - t[i]);
        return detail::cap(v);
    }
    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        for (std::size_t i = 0; i < d_; ++i)
            out[i] = t[i] + g_->sample(rng);
        ++stats.proposals;
        ++stats.accepted;
    }
    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        for (std::size_t i = 0; i < d_; ++i) {
            const double v = -g_->dlog(x[i] - t[i]);
            if (std::isnan(v))
                fail(ErrorKind::UndefinedScore, "location family with g=" + g_->name() + " has no score");
            s[i] = v;
        }
        return true;
    }

private:
    std::unique_ptr<Univariate> g_;
    std::size_t d_;
};

/// f_θ(x) = θ^{-d} Π g(x_i / θ), θ > 0.
class ScaleFamily final : public Family {
public:
    ScaleFamily(std::unique_ptr<Univariate> g, std::size_t d) : g_(std::move(g)), d_(d) {}
    std::string id() const override { return "scale"; }
    std::string spec() const override { return "scale:g=" + g_->name() + ",dim=" + std::to_string(d_); }
    std::size_t dim() const override { return d_; }
    SupportKind support() const override { return SupportKind::RealSpace; }
    std::string param_domain() const override { return "theta > 0"; }
    void validate(const Theta& t) const override
    {
        check_arity(t, 1, "scale");
        if (!(t[0] > 0.0))
            fail(ErrorKind::InvalidParam, "scale parameter must be positive");
    }
    double density_unchecked(const Theta& t, const double* x) const override
    {
        double v = std::pow(t[0], -static_cast<double>(d_));
        for (std::size_t i = 0; i < d_; ++i)
            v *= g_->pdf(x[i] / t[0]);
        return detail::cap(v);
    }
    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        for (std::size_t i = 0; i < d_; ++i)
            out[i] = t[0] * g_->sample(rng);
        ++stats.proposals;
        ++stats.accepted;
    }
    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        // d/dθ [−d log θ + Σ log g(x_i/θ)] = −d/θ − Σ (x_i/θ²) (log g)'(x_i/θ)
        double v = -static_cast<double>(d_) / t[0];
        for (std::size_t i = 0; i < d_; ++i) {
            const double u = x[i] / t[0];
            const double dl = g_->dlog(u);
            if (!std::isnan(dl))
                v -= u / t[0] * dl;
        }
        s[0] = v;
        return true;
    }

private:
    std::unique_ptr<Univariate> g_;
    std::size_t d_;
};

/// f_θ(x) = (θᵀ F⁻¹(x))² on (0,1)^d for unit θ; F is the standard normal or
/// the unit-variance Laplace CDF.  `rotated_normal_2d` is the d = 2 Gaussian
/// case parameterized by an angle.
class RotatedFamily final : public Family {
public:
    enum class Base { Gaussian, Laplace };

    RotatedFamily(std::string id, Base base, std::size_t d) : id_(std::move(id)), base_(base), d_(d) {}
    std::string id() const override { return id_; }
    std::string spec() const override
    {
        if (id_ == "rotated_normal_2d")
            return id_;
        return id_ + ":F=" + std::string(base_ == Base::Gaussian ? "gaussian" : "laplace") + ",dim=" + std::to_string(d_);
    }
    std::size_t dim() const override { return d_; }
    SupportKind support() const override { return SupportKind::UnitBox; }
    std::string param_domain() const override
    {
        return d_ == 2 ? "angle theta in R, or a unit vector in R^2" : "unit vector in R^" + std::to_string(d_);
    }

    std::vector<double> direction(const Theta& t) const
    {
        if (d_ == 2 && t.size() == 1)
            return {std::cos(t[0]), std::sin(t[0])};
        return t;
    }

    void validate(const Theta& t) const override
    {
        if (d_ == 2 && t.size() == 1) {
            check_arity(t, 1, id_);
            return;
        }
        if (id_ == "rotated_normal_2d")
            check_arity(t, 1, id_);
        check_arity(t, d_, id_);
        double n2 = 0.0;
        for (double v : t)
            n2 += v * v;
        if (std::abs(n2 - 1.0) > 1e-9)
            fail(ErrorKind::InvalidParam, id_ + " needs a unit vector theta (|theta|^2 = " + format_double(n2) + ")");
    }

    double quantile(double u) const
    {
        return base_ == Base::Gaussian ? normal_quantile(u) : laplace_.quantile(u);
    }

    double density_unchecked(const Theta& t, const double* x) const override
    {
        if (!in_support(x))
            return 0.0;
        const auto a = direction(t);
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            s += a[i] * quantile(x[i]);
        return detail::cap(s * s);
    }

    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        const auto a = direction(t);
        std::vector<double> z(d_);
        if (base_ == Base::Gaussian) {
            detail::rotated_gaussian_latent(a, rng, z.data());
            ++stats.proposals;
            ++stats.accepted;
            for (std::size_t i = 0; i < d_; ++i)
                out[i] = detail::open_unit(normal_cdf(z[i]));
            return;
        }
        // Target (aᵀy)² Π ℓ(y_i).  Since (aᵀy)² <= |y|² = Σ y_i², propose from
        // the equal-weight mixture over i of y_i² ℓ(y_i) Π_{j≠i} ℓ(y_j) (|y_i|
        // is Gamma(3, b)) and accept with probability (aᵀy)²/|y|².  The
        // acceptance rate is exactly 1/d.
        const double b = laplace_.scale;
        for (;;) {
            const std::size_t pick = rng.below(d_);
            double n2 = 0.0, dot = 0.0;
            for (std::size_t i = 0; i < d_; ++i) {
                z[i] = i == pick ? rng.sign() * rng.gamma(3.0, b) : rng.sign() * b * rng.exponential();
                n2 += z[i] * z[i];
                dot += a[i] * z[i];
            }
            ++stats.proposals;
            if (rng.uniform() * n2 < dot * dot) {
                ++stats.accepted;
                break;
            }
            detail::check_acceptance(stats, id_);
        }
        for (std::size_t i = 0; i < d_; ++i)
            out[i] = detail::open_unit(laplace_.cdf(z[i]));
    }

    /// Angle parameterization only: S = 2 (a'ᵀy) / (aᵀy) with a' = da/dθ.
    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        if (!(d_ == 2 && t.size() == 1))
            return false;
        const double y1 = quantile(x[0]), y2 = quantile(x[1]);
        const double c = std::cos(t[0]), sn = std::sin(t[0]);
        s[0] = 2.0 * (c * y2 - sn * y1) / (c * y1 + sn * y2);
        return true;
    }

private:
    std::string id_;
    Base base_;
    std::size_t d_;
    Laplace laplace_{1.0 / std::numbers::sqrt2};
};

/// (θᵀ Φ_{p,q}⁻¹(x))² on (0,1)^{p+q}: the first p coordinates use the
/// N(0, σ_p²) quantile, the rest N(0, σ_q²) with σ_p² + σ_q² = 1, and θ lies
/// on S^{p-1} × S^{q-1}.
class SopqNormalFamily final : public Family {
public:
    SopqNormalFamily(std::size_t p, std::size_t q, double sigma_p2) : p_(p), q_(q), sp2_(sigma_p2)
    {
        if (p < 1 || q < 1)
            fail(ErrorKind::InvalidInput, "sopq_normal needs p, q >= 1");
        if (!(sigma_p2 > 0.0 && sigma_p2 < 1.0))
            fail(ErrorKind::InvalidInput, "sopq_normal needs 0 < sigma_p2 < 1");
    }
    std::string id() const override { return "sopq_normal"; }
    std::string spec() const override
    {
        return "sopq_normal:p=" + std::to_string(p_) + ",q=" + std::to_string(q_) + ",sigma_p2=" + format_double(sp2_);
    }
    std::size_t dim() const override { return p_ + q_; }
    SupportKind support() const override { return SupportKind::UnitBox; }
    std::string param_domain() const override
    {
        return "theta in S^(p-1) x S^(q-1) (p+q values); for p = q = 2 also two angles";
    }

    std::vector<double> direction(const Theta& t) const
    {
        if (p_ == 2 && q_ == 2 && t.size() == 2)
            return {std::cos(t[0]), std::sin(t[0]), std::cos(t[1]), std::sin(t[1])};
        return t;
    }

    void validate(const Theta& t) const override
    {
        if (p_ == 2 && q_ == 2 && t.size() == 2) {
            check_arity(t, 2, "sopq_normal");
            return;
        }
        check_arity(t, dim(), "sopq_normal");
        double np = 0.0, nq = 0.0;
        for (std::size_t i = 0; i < p_; ++i)
            np += t[i] * t[i];
        for (std::size_t i = p_; i < dim(); ++i)
            nq += t[i] * t[i];
        if (std::abs(np - 1.0) > 1e-9 || std::abs(nq - 1.0) > 1e-9)
            fail(ErrorKind::InvalidParam, "sopq_normal needs |theta_p| = |theta_q| = 1");
    }

    double sigma(std::size_t i) const { return std::sqrt(i < p_ ? sp2_ : 1.0 - sp2_); }

    double density_unchecked(const Theta& t, const double* x) const override
    {
        if (!in_support(x))
            return 0.0;
        const auto a = direction(t);
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            s += a[i] * sigma(i) * normal_quantile(x[i]);
        return detail::cap(s * s);
    }

    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        // With y = Σ^{1/2} z the target becomes (aᵀz)² φ(z), a = Σ^{1/2}θ a
        // unit vector, and x_i = Φ(y_i/σ_i) = Φ(z_i).
        auto a = direction(t);
        for (std::size_t i = 0; i < dim(); ++i)
            a[i] *= sigma(i);
        std::vector<double> z(dim());
        detail::rotated_gaussian_latent(a, rng, z.data());
        ++stats.proposals;
        ++stats.accepted;
        for (std::size_t i = 0; i < dim(); ++i)
            out[i] = detail::open_unit(normal_cdf(z[i]));
    }

    std::size_t p() const { return p_; }
    std::size_t q() const { return q_; }

private:
    std::size_t p_, q_;
    double sp2_;
};

/// f_θ(x, y) = exp(−θ√x − √y/θ) / (4√(xy)) on (0,∞)².
class WeibullBivFamily final : public Family {
public:
    std::string id() const override { return "weibull_biv"; }
    std::size_t dim() const override { return 2; }
    SupportKind support() const override { return SupportKind::PositiveOrthant; }
    std::string param_domain() const override { return "theta > 0"; }
    void validate(const Theta& t) const override
    {
        check_arity(t, 1, "weibull_biv");
        if (!(t[0] > 0.0))
            fail(ErrorKind::InvalidParam, "weibull_biv needs theta > 0");
    }
    double density_unchecked(const Theta& t, const double* x) const override
    {
        if (!(x[0] > 0.0 && x[1] > 0.0))
            return 0.0;
        const double sx = std::sqrt(x[0]), sy = std::sqrt(x[1]);
        return detail::cap(std::exp(-t[0] * sx - sy / t[0]) / (4.0 * sx * sy));
    }
    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        const double u = rng.exponential(), v = rng.exponential();
        out[0] = (u / t[0]) * (u / t[0]);
        out[1] = (t[0] * v) * (t[0] * v);
        ++stats.proposals;
        ++stats.accepted;
    }
    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        s[0] = -std::sqrt(x[0]) + std::sqrt(x[1]) / (t[0] * t[0]);
        return true;
    }
};

/// g(a x) for x >= 0 and g(−b x) for x < 0, with 1/a + 1/b = 1 and g a density
/// on (0, ∞).  The one-parameter form uses a = θ, b = θ/(θ − 1), θ > 1.
class MassTransportFamily final : public Family {
public:
    MassTransportFamily(bool one_param, std::unique_ptr<Univariate> g, std::string g_spec)
        : one_param_(one_param), g_(std::move(g)), g_spec_(std::move(g_spec))
    {
    }
    std::string id() const override { return one_param_ ? "mass_transport_1p" : "mass_transport"; }
    std::string spec() const override { return id() + ":" + g_spec_; }
    std::size_t dim() const override { return 1; }
    SupportKind support() const override { return SupportKind::RealSpace; }
    std::string param_domain() const override
    {
        return one_param_ ? "theta > 1" : "(a, b) with a, b > 0 and 1/a + 1/b = 1";
    }

    std::pair<double, double> ab(const Theta& t) const
    {
        if (one_param_)
            return {t[0], t[0] / (t[0] - 1.0)};
        return {t[0], t[1]};
    }

    void validate(const Theta& t) const override
    {
        if (one_param_) {
            check_arity(t, 1, id());
            if (!(t[0] > 1.0))
                fail(ErrorKind::InvalidParam, "mass_transport_1p needs theta > 1");
            return;
        }
        check_arity(t, 2, id());
        if (!(t[0] > 0.0 && t[1] > 0.0))
            fail(ErrorKind::InvalidParam, "mass_transport needs a, b > 0");
        const double s = 1.0 / t[0] + 1.0 / t[1];
        if (std::abs(s - 1.0) > 1e-9)
            fail(ErrorKind::InvalidParam, "mass_transport needs 1/a + 1/b = 1, got " + format_double(s) +
                                              " for (a, b) = (" + format_double(t[0]) + ", " + format_double(t[1]) +
                                              ")");
    }

    double density_unchecked(const Theta& t, const double* x) const override
    {
        const auto [a, b] = ab(t);
        return detail::cap(x[0] >= 0.0 ? g_->pdf(a * x[0]) : g_->pdf(-b * x[0]));
    }

    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        const auto [a, b] = ab(t);
        const double z = g_->sample(rng);
        out[0] = rng.uniform() < 1.0 / a ? z / a : -z / b;
        ++stats.proposals;
        ++stats.accepted;
    }

private:
    bool one_param_;
    std::unique_ptr<Univariate> g_;
    std::string g_spec_;
};

/// f_θ(y, z) = exp(κ cos(θ + y + z)) / ((2π)² I₀(κ)) on the flat torus [0, 2π)².
class TorusVonMisesFamily final : public Family {
public:
    explicit TorusVonMisesFamily(double kappa) : kappa_(kappa)
    {
        if (!(kappa >= 0.0 && kappa <= 15.0))
            fail(ErrorKind::InvalidInput, "torus_vonmises supports 0 <= kappa <= 15");
        norm_ = 1.0 / (kTwoPi * kTwoPi * bessel_i0(kappa));
    }
    std::string id() const override { return "torus_vonmises"; }
    std::string spec() const override { return "torus_vonmises:kappa=" + format_double(kappa_); }
    std::size_t dim() const override { return 2; }
    SupportKind support() const override { return SupportKind::Torus; }
    std::string param_domain() const override { return "angle theta in R"; }
    void validate(const Theta& t) const override { check_arity(t, 1, "torus_vonmises"); }
    double density_unchecked(const Theta& t, const double* x) const override
    {
        return norm_ * std::exp(kappa_ * std::cos(t[0] + x[0] + x[1]));
    }
    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        const double w = von_mises(rng, kappa_, &stats);
        const double z = rng.uniform(0.0, kTwoPi);
        out[0] = wrap_angle(w - z - t[0]);
        out[1] = z;
        detail::check_acceptance(stats, "torus_vonmises");
    }
    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        s[0] = -kappa_ * std::sin(t[0] + x[0] + x[1]);
        return true;
    }
    double kappa() const { return kappa_; }

private:
    double kappa_;
    double norm_;
};

/// Radial families on R² built from g(r) = e^{−r²/(4π)}/(2π) and
/// ξ_ρ(φ) = sqrt(2π/(1 + ρ cos φ)), so that g(r ξ_ρ(φ)) =
/// e^{−r²/(2(1 + ρ cos φ))}/(2π).
///   radial_rho:        f_ρ(x) = g(r ξ_ρ(φ))
///   radial_rho_haar:   f̃_ρ(x) = g(r ξ_ρ(r + φ))
///   radial_rho_warped: g(r ξ_ρ(r² + φ²/(2π))) / C_ρ, a control whose angle
///                      map does not preserve the Haar measure on the circle.
class RadialFamily final : public Family {
public:
    enum class Variant { Plain, Haar, Warped };

    explicit RadialFamily(Variant v) : variant_(v) {}
    std::string id() const override
    {
        switch (variant_) {
        case Variant::Plain: return "radial_rho";
        case Variant::Haar: return "radial_rho_haar";
        case Variant::Warped: return "radial_rho_warped";
        }
        return "";
    }
    std::size_t dim() const override { return 2; }
    SupportKind support() const override { return SupportKind::RealSpace; }
    std::string param_domain() const override { return "|rho| < 1"; }
    void validate(const Theta& t) const override
    {
        check_arity(t, 1, id());
        if (!(std::abs(t[0]) < 1.0))
            fail(ErrorKind::InvalidParam, id() + " needs |rho| < 1");
    }

    static double xi(double rho, double angle) { return std::sqrt(kTwoPi / (1.0 + rho * std::cos(angle))); }
    static double g(double r) { return std::exp(-r * r / (4.0 * std::numbers::pi)) / kTwoPi; }

    static double warp(double r, double phi) { return r * r + phi * phi / kTwoPi; }

    double angle_of(double r, double phi) const
    {
        switch (variant_) {
        case Variant::Plain: return phi;
        case Variant::Haar: return r + phi;
        case Variant::Warped: return warp(r, phi);
        }
        return phi;
    }

    /// Density in polar coordinates (w.r.t. Lebesgue measure on R²).
    double density_polar(double rho, double r, double phi) const
    {
        const double s = 1.0 + rho * std::cos(angle_of(r, phi));
        const double v = std::exp(-0.5 * r * r / s) / kTwoPi;
        return variant_ == Variant::Warped ? v / warped_normalizer(rho) : v;
    }

    double density_unchecked(const Theta& t, const double* x) const override
    {
        double r, phi;
        detail::polar(x, r, phi);
        return detail::cap(density_polar(t[0], r, phi));
    }

    void draw(const Theta& t, Rng& rng, double* out, RejectionStats& stats) const override
    {
        const double rho = t[0];
        if (variant_ == Variant::Warped) {
            // Envelope e^{−r²/(2(1+|ρ|))}: uniform angle, Rayleigh radius.
            const double smax = 1.0 + std::abs(rho);
            for (;;) {
                const double phi = rng.uniform(0.0, kTwoPi);
                const double r = std::sqrt(smax) * std::sqrt(-2.0 * std::log(rng.uniform()));
                const double s = 1.0 + rho * std::cos(warp(r, phi));
                ++stats.proposals;
                if (rng.uniform() < std::exp(-0.5 * r * r * (1.0 / s - 1.0 / smax))) {
                    ++stats.accepted;
                    out[0] = r * std::cos(phi);
                    out[1] = r * std::sin(phi);
                    return;
                }
                detail::check_acceptance(stats, id());
            }
        }
        // Angle by rejection from (1 + ρ cos φ)/(2π) under (1 + |ρ|)/(2π).
        double phi;
        for (;;) {
            phi = rng.uniform(0.0, kTwoPi);
            ++stats.proposals;
            if (rng.uniform() * (1.0 + std::abs(rho)) < 1.0 + rho * std::cos(phi)) {
                ++stats.accepted;
                break;
            }
            detail::check_acceptance(stats, id());
        }
        const double r = std::sqrt(1.0 + rho * std::cos(phi)) * std::sqrt(-2.0 * std::log(rng.uniform()));
        if (variant_ == Variant::Haar)
            phi = wrap_angle(phi - r); // (R, Ψ) ~ f_ρ, then φ = Ψ − R
        out[0] = r * std::cos(phi);
        out[1] = r * std::sin(phi);
    }

    bool score_closed_form(const Theta& t, const double* x, double* s) const override
    {
        if (variant_ != Variant::Plain)
            return false;
        double r, phi;
        detail::polar(x, r, phi);
        const double c = std::cos(phi);
        const double den = 1.0 + t[0] * c;
        s[0] = r * r * c / (2.0 * den * den);
        return true;
    }

    /// ∫ e^{−r²/(2 s(r, φ))}/(2π) r dr dφ for the warped control, by nested
    /// quadrature; cached per ρ.
    double warped_normalizer(double rho) const
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = cache_.find(rho);
        if (it != cache_.end())
            return it->second;
        const auto res = integrate_polar(
            [rho](double r, double phi) {
                return std::exp(-0.5 * r * r / (1.0 + rho * std::cos(warp(r, phi)))) / kTwoPi;
            },
            QuadOptions{1e-10, 0.0, 20000});
        cache_.emplace(rho, res.value);
        return res.value;
    }

    Variant variant() const { return variant_; }

private:
    Variant variant_;
    mutable std::mutex cache_mutex_;
    mutable std::map<double, double> cache_;
};

// ---------------------------------------------------------------------------
// Operations

/// Density with θ validation.
inline double density(const Family& fam, const Theta& theta, std::span<const double> x)
{
    fam.validate(theta);
    if (x.size() != fam.dim())
        fail(ErrorKind::InvalidInput, "point dimension does not match family dimension");
    return fam.density_unchecked(theta, x.data());
}

struct SampleStats {
    RejectionStats rejection;
};

/// n iid draws from f_θ using `rng`.
inline PointCloud sample(const Family& fam, const Theta& theta, std::size_t n, Rng& rng, SampleStats* stats = nullptr)
{
    fam.validate(theta);
    if (n < 1)
        fail(ErrorKind::InvalidInput, "sample size must be at least 1");
    PointCloud cloud(fam.dim(), fam.metric());
    cloud.reserve(n);
    std::vector<double> p(fam.dim());
    RejectionStats rs;
    for (std::size_t i = 0; i < n; ++i) {
        fam.draw(theta, rng, p.data(), rs);
        cloud.push_back(p);
    }
    detail::check_acceptance(rs, fam.id());
    if (stats)
        stats->rejection += rs;
    return cloud;
}

/// Stream used by `sample(fam, θ, n, seed)`.
inline Rng sample_stream(std::uint64_t seed, const Theta& theta)
{
    return Rng(seed, stream_id({hash_label("sample"), hash_label(format_theta(theta))}));
}

inline PointCloud sample(const Family& fam, const Theta& theta, std::size_t n, std::uint64_t seed,
                         SampleStats* stats = nullptr)
{
    Rng rng = sample_stream(seed, theta);
    return sample(fam, theta, n, rng, stats);
}

/// Central-difference score with step 1e-5·max(1, |θ_i|).
inline std::vector<double> score_finite_difference(const Family& fam, const Theta& theta, std::span<const double> x)
{
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
        Theta tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double fp = fam.density_unchecked(tp, x.data());
        const double fm = fam.density_unchecked(tm, x.data());
        if (!(fp > 0.0 && fm > 0.0))
            fail(ErrorKind::UndefinedScore, "density vanishes next to x; score undefined");
        out[i] = (std::log(fp) - std::log(fm)) / (2.0 * h);
    }
    return out;
}

/// ∇_θ log f_θ(x); closed form where the family provides one.
inline std::vector<double> score(const Family& fam, const Theta& theta, std::span<const double> x)
{
    const double f = density(fam, theta, x);
    if (!(f > 0.0))
        fail(ErrorKind::UndefinedScore, "density is zero at x; score undefined");
    std::vector<double> out(theta.size());
    if (fam.score_closed_form(theta, x.data(), out.data()))
        return out;
    return score_finite_difference(fam, theta, x);
}

// ---------------------------------------------------------------------------
// Registry

struct FamilyOption {
    std::string name;
    std::string default_value;
    std::string description;
};

struct FamilyInfo {
    std::string id;
    std::string description;
    std::string params;
    std::vector<FamilyOption> options;
    std::string sampler;
    bool closed_form_score;
};

inline const std::vector<FamilyInfo>& family_catalog()
{
    static const std::vector<FamilyInfo> catalog = {
        {"location", "f(x) = prod g(x_i - theta_i)", "theta in R^dim",
         {{"g", "gaussian", "gaussian | uniform | laplace"}, {"dim", "1", "dimension"}}, "theta + iid draws of g",
         true},
        {"scale", "f(x) = theta^-dim prod g(x_i / theta)", "theta > 0",
         {{"g", "gaussian", "gaussian | uniform | laplace"}, {"dim", "1", "dimension"}}, "theta * iid draws of g", true},
        {"rotated_normal_2d", "f(x) = (cos t Phi^-1(x1) + sin t Phi^-1(x2))^2 on (0,1)^2", "angle theta", {},
         "chi(3) with random sign along theta, normal across, then Phi", true},
        {"rotated_general_d", "f(x) = (theta . F^-1(x))^2 on (0,1)^dim", "unit vector (or angle when dim = 2)",
         {{"F", "gaussian", "gaussian | laplace (variance 1)"}, {"dim", "2", "dimension"}},
         "gaussian: exact rotation; laplace: rejection under |y|^2 (acceptance 1/dim)", false},
        {"weibull_biv", "f(x,y) = exp(-theta sqrt x - sqrt y / theta) / (4 sqrt(xy))", "theta > 0", {},
         "X = (U/theta)^2, Y = (theta V)^2 with U, V unit exponentials", true},
        {"sopq_normal", "f(x) = (theta . Phi_pq^-1(x))^2 on (0,1)^(p+q)", "theta in S^(p-1) x S^(q-1)",
         {{"p", "2", "first block size"}, {"q", "2", "second block size"}, {"sigma_p2", "0.5", "variance of block p"}},
         "exact rotation in whitened coordinates", false},
        {"mass_transport", "f(x) = g(a x) for x >= 0, g(-b x) for x < 0", "(a, b) with 1/a + 1/b = 1",
         {{"g", "gamma", "gamma | exponential"}, {"shape", "10", "gamma shape"}, {"scale", "0.5", "gamma scale"}},
         "Z ~ g; Z/a with probability 1/a, else -Z/b", false},
        {"mass_transport_1p", "mass_transport with a = theta, b = theta/(theta - 1)", "theta > 1",
         {{"g", "gamma", "gamma | exponential"}, {"shape", "10", "gamma shape"}, {"scale", "0.5", "gamma scale"}},
         "as mass_transport", false},
        {"torus_vonmises", "f(y,z) = exp(kappa cos(theta + y + z)) / ((2 pi)^2 I0(kappa)) on [0, 2pi)^2",
         "angle theta", {{"kappa", "2", "concentration, 0..15"}},
         "W von Mises by rejection, Z uniform, Y = W - Z - theta mod 2pi", true},
        {"radial_rho", "f(x) = exp(-r^2 / (2 (1 + rho cos phi))) / (2 pi)", "|rho| < 1", {},
         "angle by rejection, R = sqrt(1 + rho cos phi) sqrt(-2 ln U)", true},
        {"radial_rho_haar", "f(x) = g(r xi_rho(r + phi))", "|rho| < 1", {}, "(R, Psi) from radial_rho, phi = Psi - R",
         false},
        {"radial_rho_warped", "control: g(r xi_rho(r^2 + phi^2/(2 pi))) / C_rho", "|rho| < 1", {},
         "rejection under exp(-r^2 / (2 (1 + |rho|)))", false},
    };
    return catalog;
}

inline const FamilyInfo& family_info(std::string_view id)
{
    for (const auto& info : family_catalog())
        if (info.id == id)
            return info;
    fail(ErrorKind::InvalidInput, "unknown family '" + std::string(id) + "'");
}

namespace detail {

inline std::size_t parse_count(const std::string& v, const std::string& key)
{
    const double d = parse_double(v);
    if (!(d >= 1.0 && d <= 64.0) || d != std::floor(d))
        fail(ErrorKind::InvalidInput, "option " + key + " must be a positive integer");
    return static_cast<std::size_t>(d);
}

} // namespace detail

/// Builds a family from `id` or `id:key=value,key=value`.
inline FamilyPtr make_family(std::string_view spec_text)
{
    const std::string spec = trim(spec_text);
    const auto colon = spec.find(':');
    const std::string id = spec.substr(0, colon);
    const FamilyInfo& info = family_info(id);

    std::map<std::string, std::string> opt;
    for (const auto& o : info.options)
        opt[o.name] = o.default_value;
    if (colon != std::string::npos) {
        for (const auto& kv : split(spec.substr(colon + 1), ',')) {
            if (trim(kv).empty())
                continue;
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::InvalidInput, "family option '" + kv + "' is not key=value");
            const std::string key = trim(kv.substr(0, eq));
            if (!opt.count(key))
                fail(ErrorKind::InvalidInput, "family '" + id + "' has no option '" + key + "'");
            opt[key] = trim(kv.substr(eq + 1));
        }
    }

    if (id == "location" || id == "scale") {
        const std::string& g = opt["g"];
        if (g != "gaussian" && g != "uniform" && g != "laplace")
            fail(ErrorKind::InvalidInput, id + " supports g = gaussian | uniform | laplace");
        auto base = detail::make_univariate(g, 1.0, 1.0);
        const std::size_t d = detail::parse_count(opt["dim"], "dim");
        if (id == "location")
            return std::make_shared<LocationFamily>(std::move(base), d);
        return std::make_shared<ScaleFamily>(std::move(base), d);
    }
    if (id == "rotated_normal_2d")
        return std::make_shared<RotatedFamily>(id, RotatedFamily::Base::Gaussian, 2);
    if (id == "rotated_general_d") {
        const std::string& f = opt["F"];
        if (f != "gaussian" && f != "laplace")
            fail(ErrorKind::InvalidInput, "rotated_general_d supports F = gaussian | laplace");
        return std::make_shared<RotatedFamily>(
            id, f == "gaussian" ? RotatedFamily::Base::Gaussian : RotatedFamily::Base::Laplace,
            detail::parse_count(opt["dim"], "dim"));
    }
    if (id == "weibull_biv")
        return std::make_shared<WeibullBivFamily>();
    if (id == "sopq_normal")
        return std::make_shared<SopqNormalFamily>(detail::parse_count(opt["p"], "p"), detail::parse_count(opt["q"], "q"),
                                                  parse_double(opt["sigma_p2"]));
    if (id == "mass_transport" || id == "mass_transport_1p") {
        const std::string& g = opt["g"];
        if (g != "gamma" && g != "exponential")
            fail(ErrorKind::InvalidInput, id + " supports g = gamma | exponential");
        const double shape = parse_double(opt["shape"]);
        const double scale = parse_double(opt["scale"]);
        std::string g_spec = "g=" + g;
        if (g == "gamma")
            g_spec += ",shape=" + format_double(shape) + ",scale=" + format_double(scale);
        return std::make_shared<MassTransportFamily>(id == "mass_transport_1p", detail::make_univariate(g, shape, scale),
                                                     g_spec);
    }
    if (id == "torus_vonmises")
        return std::make_shared<TorusVonMisesFamily>(parse_double(opt["kappa"]));
    if (id == "radial_rho")
        return std::make_shared<RadialFamily>(RadialFamily::Variant::Plain);
    if (id == "radial_rho_haar")
        return std::make_shared<RadialFamily>(RadialFamily::Variant::Haar);
    if (id == "radial_rho_warped")
        return std::make_shared<RadialFamily>(RadialFamily::Variant::Warped);
    fail(ErrorKind::InvalidInput, "unknown family '" + id + "'");
}

/// Machine-readable description of every registered family (JSON).
inline std::string family_manifest_json()
{
    nlohmann::ordered_json families = nlohmann::ordered_json::array();
    for (const auto& info : family_catalog()) {
        nlohmann::ordered_json opts = nlohmann::ordered_json::array();
        for (const auto& o : info.options)
            opts.push_back({{"name", o.name}, {"default", o.default_value}, {"description", o.description}});
        const FamilyPtr fam = make_family(info.id);
        families.push_back({{"id", info.id},
                            {"description", info.description},
                            {"params", info.params},
                            {"options", opts},
                            {"default_dim", fam->dim()},
                            {"support", std::string(to_string(fam->support()))},
                            {"sampler", info.sampler},
                            {"closed_form_score", info.closed_form_score}});
    }
    return nlohmann::ordered_json{{"families", families}}.dump(2) + "\n";
}

} // namespace bettieq
