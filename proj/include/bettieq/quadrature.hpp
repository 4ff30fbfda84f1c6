#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature, with the interval
// transforms and nested 2D rules the verifiers need.  The 15-point rule is
// open, so integrable endpoint singularities are never evaluated.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bettieq/error.hpp"
#include "bettieq/io.hpp"

namespace bettieq {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_intervals = 4000;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod_15(F& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1)
            gauss += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

} // namespace detail

/// Adaptive integral of f over the finite interval [a, b].
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, const QuadOptions& opt = {})
{
    if (!(std::isfinite(a) && std::isfinite(b)))
        fail(ErrorKind::InvalidInput, "integrate_adaptive needs a finite interval; use integrate_to_infinity");
    QuadResult res;
    if (a == b)
        return res;
    const double sign = b < a ? -1.0 : 1.0;
    if (b < a)
        std::swap(a, b);
    std::vector<detail::Segment> heap{detail::gauss_kronrod_15(f, a, b)};
    res.evaluations = 15;
    double total = heap.front().value;
    double err = heap.front().error;
    std::size_t iter = 0;
    while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (heap.size() >= opt.max_intervals)
            fail(ErrorKind::QuadratureError, "no convergence on [" + format_double(a) + ", " + format_double(b) +
                                                 "]: error estimate " + format_double(err) + " after " +
                                                 std::to_string(heap.size()) + " subintervals");
        std::pop_heap(heap.begin(), heap.end());
        const detail::Segment worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            fail(ErrorKind::QuadratureError, "subinterval too small to bisect near " + format_double(mid));
        const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        res.evaluations += 30;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        if (++iter % 64 == 0 || err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
            // Re-sum so the running totals carry no cancellation drift.
            total = 0.0;
            err = 0.0;
            for (const auto& seg : heap) {
                total += seg.value;
                err += seg.error;
            }
        }
        if (!std::isfinite(total))
            fail(ErrorKind::QuadratureError, "integrand is not finite on the domain");
    }
    res.value = sign * total;
    res.error = err;
    return res;
}

/// Integral over [a, inf) through x = a + t/(1 - t), t in [0, 1).
template <class F>
QuadResult integrate_to_infinity(F&& f, double a, const QuadOptions& opt = {})
{
    auto g = [&](double t) {
        const double u = 1.0 - t;
        return f(a + t / u) / (u * u);
    };
    return integrate_adaptive(g, 0.0, 1.0, opt);
}

/// Integral over the whole real line, split at 0.
template <class F>
QuadResult integrate_real_line(F&& f, const QuadOptions& opt = {})
{
    QuadOptions half = opt;
    half.abs_tol = 0.5 * opt.abs_tol;
    const auto pos = integrate_to_infinity(f, 0.0, half);
    const auto neg = integrate_to_infinity([&](double x) { return f(-x); }, 0.0, half);
    return {pos.value + neg.value, pos.error + neg.error, pos.evaluations + neg.evaluations};
}

/// One axis of a nested 2D rule: finite [lo, hi], or hi = +inf.
struct Axis {
    double lo;
    double hi;
};

namespace detail {

template <class F>
QuadResult integrate_axis(F&& f, const Axis& ax, const QuadOptions& opt)
{
    if (std::isinf(ax.hi)) {
        if (std::isinf(ax.lo))
            return integrate_real_line(f, opt);
        return integrate_to_infinity(f, ax.lo, opt);
    }
    return integrate_adaptive(f, ax.lo, ax.hi, opt);
}

} // namespace detail

/// Nested adaptive integral of f(x, y) over a product of two axes.  The
/// inner tolerance is tightened so that its accumulated error stays below
/// the outer tolerance.
template <class F>
QuadResult integrate_2d(F&& f, const Axis& outer, const Axis& inner, const QuadOptions& opt = {})
{
    QuadOptions in_opt = opt;
    in_opt.abs_tol = 0.1 * opt.abs_tol;
    std::size_t evals = 0;
    double inner_err = 0.0;
    auto g = [&](double x) {
        const auto r = detail::integrate_axis([&](double y) { return f(x, y); }, inner, in_opt);
        evals += r.evaluations;
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    QuadOptions out_opt = opt;
    out_opt.abs_tol = 0.5 * opt.abs_tol;
    auto res = detail::integrate_axis(g, outer, out_opt);
    const double outer_len = std::isinf(outer.hi) ? 1.0 : std::abs(outer.hi - outer.lo);
    res.error += inner_err * outer_len;
    res.evaluations = evals;
    return res;
}

/// Integral of f(r, phi) r dr dphi over the plane.
template <class F>
QuadResult integrate_polar(F&& f, const QuadOptions& opt = {})
{
    return integrate_2d([&](double phi, double r) { return f(r, phi) * r; }, Axis{0.0, 2.0 * std::numbers::pi},
                        Axis{0.0, std::numeric_limits<double>::infinity()}, opt);
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (n < 1)
        fail(ErrorKind::InvalidInput, "Gauss-Legendre rule needs n >= 1");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    // Returns P_n(x) and P_n'(x).
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
}

/// Tensor-product Gauss-Legendre rule over a box; f takes a point vector.
/// Evaluates n^dim points.
inline double integrate_product_gauss(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<Axis>& box, int n)
{
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const std::size_t dim = box.size();
    std::vector<std::size_t> idx(dim, 0);
    std::vector<double> p(dim);
    double total = 0.0;
    for (;;) {
        double weight = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            const double h = 0.5 * (box[a].hi - box[a].lo);
            p[a] = box[a].lo + h * (x[idx[a]] + 1.0);
            weight *= h * w[idx[a]];
        }
        total += weight * f(p);
        std::size_t a = 0;
        while (a < dim && ++idx[a] == static_cast<std::size_t>(n))
            idx[a++] = 0;
        if (a == dim)
            break;
    }
    return total;
}

} // namespace bettieq
