#pragma once

// Point clouds, minimal enclosing balls and truncated Čech / Vietoris-Rips
// filtrations.
//
// Both complexes are parameterized by ball radius: a Čech simplex enters at
// the radius of its minimal enclosing ball, a Rips simplex at half its
// diameter.  Construction is edge-first: the neighbourhood graph at r_max is
// built once and higher simplices are only sought among its cliques.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bettieq/error.hpp"
#include "bettieq/io.hpp"

namespace bettieq {

inline constexpr int kMaxAmbientDim = 8;
inline constexpr int kMaxSimplexVertices = 8;
inline constexpr std::size_t kDefaultSimplexBudget = 20'000'000;

enum class MetricKind { Euclidean, FlatTorus };

struct Metric {
    MetricKind kind = MetricKind::Euclidean;
    std::vector<double> period; // per axis, FlatTorus only

    static Metric euclidean() { return {}; }
    static Metric flat_torus(std::vector<double> period) { return {MetricKind::FlatTorus, std::move(period)}; }

    bool operator==(const Metric&) const = default;
};

class PointCloud {
public:
    explicit PointCloud(std::size_t dim, Metric metric = Metric::euclidean())
        : dim_(dim), metric_(std::move(metric))
    {
        if (dim_ < 1)
            fail(ErrorKind::InvalidInput, "point dimension must be at least 1");
        if (metric_.kind == MetricKind::FlatTorus) {
            if (metric_.period.size() != dim_)
                fail(ErrorKind::InvalidInput, "torus period needs one entry per axis");
            for (double p : metric_.period)
                if (!(p > 0.0))
                    fail(ErrorKind::InvalidInput, "torus period must be positive");
        }
    }

    std::size_t size() const { return coords_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return coords_.empty(); }
    const Metric& metric() const { return metric_; }

    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    double coord(std::size_t i, std::size_t axis) const { return coords_[i * dim_ + axis]; }
    const std::vector<double>& coords() const { return coords_; }

    void reserve(std::size_t n) { coords_.reserve(n * dim_); }

    void push_back(std::span<const double> p)
    {
        if (p.size() != dim_)
            fail(ErrorKind::InvalidInput, "point has dimension " + std::to_string(p.size()) +
                                              ", cloud has " + std::to_string(dim_));
        for (std::size_t a = 0; a < dim_; ++a) {
            if (!std::isfinite(p[a]))
                fail(ErrorKind::InvalidInput, "non-finite coordinate");
            if (metric_.kind == MetricKind::FlatTorus && (p[a] < 0.0 || p[a] >= metric_.period[a]))
                fail(ErrorKind::InvalidInput, "torus coordinate outside [0, period)");
        }
        coords_.insert(coords_.end(), p.begin(), p.end());
    }

    void push_back(std::initializer_list<double> p) { push_back(std::span<const double>(p.begin(), p.size())); }

    double distance(std::size_t i, std::size_t j) const
    {
        double s = 0.0;
        const double* a = coords_.data() + i * dim_;
        const double* b = coords_.data() + j * dim_;
        if (metric_.kind == MetricKind::Euclidean) {
            for (std::size_t k = 0; k < dim_; ++k) {
                const double d = a[k] - b[k];
                s += d * d;
            }
        } else {
            for (std::size_t k = 0; k < dim_; ++k) {
                double d = std::abs(a[k] - b[k]);
                d = std::min(d, metric_.period[k] - d);
                s += d * d;
            }
        }
        return std::sqrt(s);
    }

    bool operator==(const PointCloud&) const = default;

private:
    std::size_t dim_;
    Metric metric_;
    std::vector<double> coords_;
};

struct Simplex {
    std::array<std::uint32_t, kMaxSimplexVertices> vertex{};
    std::uint32_t count = 0;
    double value = 0.0;

    int dim() const { return static_cast<int>(count) - 1; }
    std::span<const std::uint32_t> vertices() const { return {vertex.data(), count}; }

    static Simplex from(std::initializer_list<std::uint32_t> vs, double value)
    {
        Simplex s;
        for (std::uint32_t v : vs)
            s.vertex[s.count++] = v;
        s.value = value;
        return s;
    }

    bool operator==(const Simplex&) const = default;
};

/// Lexicographic comparison of vertex tuples of equal length.
inline bool vertices_less(const Simplex& a, const Simplex& b)
{
    return std::lexicographical_compare(a.vertex.begin(), a.vertex.begin() + a.count, b.vertex.begin(),
                                        b.vertex.begin() + b.count);
}

/// Filtration order: value, then dimension, then vertices.
inline bool filtration_less(const Simplex& a, const Simplex& b)
{
    if (a.value != b.value)
        return a.value < b.value;
    if (a.count != b.count)
        return a.count < b.count;
    return vertices_less(a, b);
}

struct Filtration {
    std::vector<Simplex> simplices;
    int dim_max = 0;
    double r_max = 0.0;

    std::size_t size() const { return simplices.size(); }

    std::size_t count(int dim) const
    {
        return static_cast<std::size_t>(std::count_if(simplices.begin(), simplices.end(),
                                                      [dim](const Simplex& s) { return s.dim() == dim; }));
    }

    bool operator==(const Filtration&) const = default;
};

// ---------------------------------------------------------------------------
// Minimal enclosing ball

namespace detail {

struct Ball {
    std::array<double, kMaxAmbientDim> center{};
    double r2 = -1.0; // negative: empty ball
    bool degenerate = false;
};

struct MebContext {
    const double* const* pts;
    int dim;
    double tol;

    bool contains(const Ball& b, const double* p) const
    {
        if (b.r2 < 0.0)
            return false;
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double d = p[k] - b.center[k];
            s += d * d;
        }
        return s <= b.r2 * (1.0 + tol) + 1e-300;
    }

    // Smallest ball with every point of `support` on its boundary: centre in
    // the affine hull, found from the Gram system of the edge vectors.
    Ball circumball(const int* support, int k) const
    {
        Ball b;
        if (k == 0)
            return b;
        const double* p0 = pts[support[0]];
        for (int a = 0; a < dim; ++a)
            b.center[a] = p0[a];
        b.r2 = 0.0;
        if (k == 1)
            return b;
        const int m = k - 1;
        std::array<std::array<double, kMaxAmbientDim>, kMaxSimplexVertices> e{};
        for (int i = 0; i < m; ++i)
            for (int a = 0; a < dim; ++a)
                e[i][a] = pts[support[i + 1]][a] - p0[a];
        std::array<std::array<double, kMaxSimplexVertices + 1>, kMaxSimplexVertices> g{};
        double scale = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                double s = 0.0;
                for (int a = 0; a < dim; ++a)
                    s += e[i][a] * e[j][a];
                g[i][j] = s;
            }
            g[i][m] = 0.5 * g[i][i];
            scale = std::max(scale, g[i][i]);
        }
        // Gaussian elimination with partial pivoting on the augmented system.
        for (int c = 0; c < m; ++c) {
            int piv = c;
            for (int r = c + 1; r < m; ++r)
                if (std::abs(g[r][c]) > std::abs(g[piv][c]))
                    piv = r;
            if (!(std::abs(g[piv][c]) > 1e-12 * scale)) {
                b.degenerate = true;
                return b;
            }
            std::swap(g[c], g[piv]);
            for (int r = c + 1; r < m; ++r) {
                const double f = g[r][c] / g[c][c];
                for (int cc = c; cc <= m; ++cc)
                    g[r][cc] -= f * g[c][cc];
            }
        }
        std::array<double, kMaxSimplexVertices> lambda{};
        for (int r = m - 1; r >= 0; --r) {
            double s = g[r][m];
            for (int cc = r + 1; cc < m; ++cc)
                s -= g[r][cc] * lambda[cc];
            lambda[r] = s / g[r][r];
        }
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            double off = 0.0;
            for (int i = 0; i < m; ++i)
                off += lambda[i] * e[i][a];
            b.center[a] = p0[a] + off;
            r2 += off * off;
        }
        b.r2 = r2;
        return b;
    }
};

// Move-to-front recursion.  `order` holds point indices and is permuted.
inline Ball mtf_ball(const MebContext& ctx, int* order, int end, int* support, int k, bool& degenerate)
{
    Ball ball = ctx.circumball(support, k);
    if (ball.degenerate)
        degenerate = true;
    if (k == ctx.dim + 1)
        return ball;
    for (int i = 0; i < end; ++i) {
        if (!ctx.contains(ball, ctx.pts[order[i]])) {
            support[k] = order[i];
            ball = mtf_ball(ctx, order, i, support, k + 1, degenerate);
            std::rotate(order, order + i, order + i + 1);
        }
    }
    return ball;
}

// Exhaustive fallback for affinely degenerate inputs: the smallest
// circumball (over subsets of size <= dim+1) that contains every point.
inline double meb_by_subsets(const MebContext& ctx, int m)
{
    double best = std::numeric_limits<double>::infinity();
    std::array<int, kMaxSimplexVertices> sub{};
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        const int k = std::popcount(mask);
        if (k > ctx.dim + 1)
            continue;
        int c = 0;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i))
                sub[c++] = i;
        const Ball b = ctx.circumball(sub.data(), k);
        if (b.degenerate || b.r2 >= best * best)
            continue;
        bool ok = true;
        for (int i = 0; i < m && ok; ++i)
            ok = ctx.contains(b, ctx.pts[i]);
        if (ok)
            best = std::sqrt(b.r2);
    }
    return best;
}

inline double meb_radius(const double* const* pts, int m, int dim)
{
    if (m == 0)
        fail(ErrorKind::InvalidInput, "minimal enclosing ball of an empty set");
    if (m > kMaxSimplexVertices)
        fail(ErrorKind::InvalidInput, "minimal enclosing ball supports at most 8 points");
    if (dim < 1 || dim > kMaxAmbientDim)
        fail(ErrorKind::InvalidInput, "minimal enclosing ball supports ambient dimension 1..8");
    if (m == 1)
        return 0.0;
    if (m == 2) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double d = pts[0][a] - pts[1][a];
            s += d * d;
        }
        return 0.5 * std::sqrt(s);
    }
    const MebContext ctx{pts, dim, 1e-13};
    std::array<int, kMaxSimplexVertices> order{};
    std::iota(order.begin(), order.begin() + m, 0);
    std::array<int, kMaxAmbientDim + 1> support{};
    bool degenerate = false;
    const Ball b = mtf_ball(ctx, order.data(), m, support.data(), 0, degenerate);
    if (degenerate)
        return meb_by_subsets(ctx, m);
    return std::sqrt(b.r2);
}

} // namespace detail

/// Radius of the smallest Euclidean ball containing all `points`.
inline double min_enclosing_ball_radius(const std::vector<std::vector<double>>& points)
{
    if (points.empty())
        fail(ErrorKind::InvalidInput, "minimal enclosing ball of an empty set");
    const std::size_t dim = points.front().size();
    std::array<const double*, kMaxSimplexVertices> ptrs{};
    if (points.size() > ptrs.size())
        fail(ErrorKind::InvalidInput, "minimal enclosing ball supports at most 8 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim)
            fail(ErrorKind::InvalidInput, "points of mixed dimension");
        ptrs[i] = points[i].data();
    }
    return detail::meb_radius(ptrs.data(), static_cast<int>(points.size()), static_cast<int>(dim));
}

// ---------------------------------------------------------------------------
// Filtration construction

namespace detail {

struct Neighbour {
    std::uint32_t index;
    double value;
};

// Edges {i < j} with d(i, j)/2 <= r_max, as per-vertex lists of higher
// neighbours sorted by index.
inline std::vector<std::vector<Neighbour>> neighbourhood_graph(const PointCloud& cloud, double r_max)
{
    const std::size_t n = cloud.size();
    std::vector<std::vector<Neighbour>> adj(n);
    const double reach = 2.0 * r_max;
    if (cloud.metric().kind == MetricKind::Euclidean) {
        // Sweep along the first axis.
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double xa = cloud.coord(a, 0), xb = cloud.coord(b, 0);
            return xa != xb ? xa < xb : a < b;
        });
        for (std::size_t p = 0; p < n; ++p) {
            const std::uint32_t i = order[p];
            const double xi = cloud.coord(i, 0);
            for (std::size_t q = p + 1; q < n; ++q) {
                const std::uint32_t j = order[q];
                if (cloud.coord(j, 0) - xi > reach)
                    break;
                const double half = 0.5 * cloud.distance(i, j);
                if (half <= r_max) {
                    if (i < j)
                        adj[i].push_back({j, half});
                    else
                        adj[j].push_back({i, half});
                }
            }
        }
        for (auto& list : adj)
            std::sort(list.begin(), list.end(),
                      [](const Neighbour& a, const Neighbour& b) { return a.index < b.index; });
    } else {
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j) {
                const double half = 0.5 * cloud.distance(i, j);
                if (half <= r_max)
                    adj[i].push_back({j, half});
            }
    }
    return adj;
}

inline double edge_value(const std::vector<std::vector<Neighbour>>& adj, std::uint32_t i, std::uint32_t j)
{
    const auto& list = adj[std::min(i, j)];
    const std::uint32_t key = std::max(i, j);
    auto it = std::lower_bound(list.begin(), list.end(), key,
                               [](const Neighbour& nb, std::uint32_t k) { return nb.index < k; });
    return it->value;
}

enum class ComplexKind { Cech, Rips };

class CliqueExpander {
public:
    CliqueExpander(const PointCloud& cloud, const std::vector<std::vector<Neighbour>>& adj, ComplexKind kind,
                   double r_max, int dim_max, std::size_t budget, std::vector<std::vector<Simplex>>& by_dim)
        : cloud_(cloud), adj_(adj), kind_(kind), r_max_(r_max), dim_max_(dim_max), budget_(budget), by_dim_(by_dim)
    {
    }

    void run()
    {
        const auto n = static_cast<std::uint32_t>(cloud_.size());
        for (std::uint32_t i = 0; i < n; ++i) {
            Simplex s;
            s.vertex[0] = i;
            s.count = 1;
            s.value = 0.0;
            emit(s);
            if (dim_max_ < 1)
                continue;
            std::vector<std::uint32_t> cand;
            cand.reserve(adj_[i].size());
            for (const auto& nb : adj_[i])
                cand.push_back(nb.index);
            expand(s, cand);
        }
    }

private:
    void emit(const Simplex& s)
    {
        if (++total_ > budget_)
            fail(ErrorKind::BudgetExceeded,
                 "filtration exceeds the simplex budget of " + std::to_string(budget_) + " at dimension " +
                     std::to_string(s.dim()) + " (r_max=" + format_double(r_max_) + ", n=" +
                     std::to_string(cloud_.size()) + ")");
        by_dim_[static_cast<std::size_t>(s.dim())].push_back(s);
    }

    double value_of(const Simplex& parent, const Simplex& s) const
    {
        const std::uint32_t added = s.vertex[s.count - 1];
        if (s.count == 2)
            return edge_value(adj_, parent.vertex[0], added);
        if (kind_ == ComplexKind::Rips) {
            double v = parent.value;
            for (std::uint32_t a = 0; a + 1 < s.count; ++a)
                v = std::max(v, edge_value(adj_, s.vertex[a], added));
            return v;
        }
        std::array<const double*, kMaxSimplexVertices> pts{};
        for (std::uint32_t a = 0; a < s.count; ++a)
            pts[a] = cloud_.point(s.vertex[a]).data();
        const double meb = meb_radius(pts.data(), static_cast<int>(s.count), static_cast<int>(cloud_.dim()));
        return std::max(meb, parent.value);
    }

    void expand(const Simplex& parent, const std::vector<std::uint32_t>& cand)
    {
        for (std::size_t c = 0; c < cand.size(); ++c) {
            Simplex s = parent;
            s.vertex[s.count++] = cand[c];
            s.value = value_of(parent, s);
            if (s.value > r_max_)
                continue;
            emit(s);
            if (s.dim() >= dim_max_)
                continue;
            // Remaining candidates adjacent to the new vertex.
            std::vector<std::uint32_t> next;
            const auto& nbs = adj_[cand[c]];
            auto it = nbs.begin();
            for (std::size_t d = c + 1; d < cand.size(); ++d) {
                it = std::lower_bound(it, nbs.end(), cand[d],
                                      [](const Neighbour& nb, std::uint32_t k) { return nb.index < k; });
                if (it == nbs.end())
                    break;
                if (it->index == cand[d])
                    next.push_back(cand[d]);
            }
            if (!next.empty())
                expand(s, next);
        }
    }

    const PointCloud& cloud_;
    const std::vector<std::vector<Neighbour>>& adj_;
    ComplexKind kind_;
    double r_max_;
    int dim_max_;
    std::size_t budget_;
    std::size_t total_ = 0;
    std::vector<std::vector<Simplex>>& by_dim_;
};

inline Filtration build_filtration(const PointCloud& cloud, double r_max, int dim_max, std::size_t budget,
                                   ComplexKind kind)
{
    if (dim_max < 0 || dim_max >= kMaxSimplexVertices)
        fail(ErrorKind::InvalidInput, "dim_max must lie in 0..7");
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        fail(ErrorKind::InvalidInput, "r_max must be positive and finite");
    if (kind == ComplexKind::Cech && static_cast<int>(cloud.dim()) > kMaxAmbientDim)
        fail(ErrorKind::InvalidInput, "Čech construction supports ambient dimension up to 8");

    const auto adj = neighbourhood_graph(cloud, r_max);
    std::vector<std::vector<Simplex>> by_dim(static_cast<std::size_t>(dim_max) + 1);
    CliqueExpander(cloud, adj, kind, r_max, dim_max, budget, by_dim).run();

    // Depth-first expansion visits each dimension in lexicographic order.
    // Clamp values to their facets so that rounding in the enclosing-ball
    // solver can never break monotonicity.
    for (std::size_t d = 2; d < by_dim.size(); ++d) {
        const auto& lower = by_dim[d - 1];
        for (Simplex& s : by_dim[d]) {
            for (std::uint32_t skip = 0; skip < s.count; ++skip) {
                Simplex f;
                for (std::uint32_t a = 0; a < s.count; ++a)
                    if (a != skip)
                        f.vertex[f.count++] = s.vertex[a];
                auto it = std::lower_bound(lower.begin(), lower.end(), f, vertices_less);
                s.value = std::max(s.value, it->value);
            }
        }
    }

    Filtration out;
    out.dim_max = dim_max;
    out.r_max = r_max;
    std::size_t total = 0;
    for (const auto& v : by_dim)
        total += v.size();
    out.simplices.reserve(total);
    for (const auto& v : by_dim)
        out.simplices.insert(out.simplices.end(), v.begin(), v.end());
    std::sort(out.simplices.begin(), out.simplices.end(), filtration_less);
    return out;
}

} // namespace detail

/// Čech filtration truncated at r_max: a simplex enters at the radius of the
/// minimal enclosing ball of its vertices.  Euclidean clouds only.
inline Filtration build_cech_filtration(const PointCloud& cloud, double r_max, int dim_max,
                                        std::size_t budget = kDefaultSimplexBudget)
{
    if (cloud.metric().kind != MetricKind::Euclidean)
        fail(ErrorKind::UnsupportedMetric, "Čech filtration needs a Euclidean cloud; use Rips on the torus");
    return detail::build_filtration(cloud, r_max, dim_max, budget, detail::ComplexKind::Cech);
}

/// Vietoris-Rips filtration on the radius axis: an edge enters at half its
/// length, a higher simplex at its longest edge.
inline Filtration build_rips_filtration(const PointCloud& cloud, double r_max, int dim_max,
                                        std::size_t budget = kDefaultSimplexBudget)
{
    return detail::build_filtration(cloud, r_max, dim_max, budget, detail::ComplexKind::Rips);
}

// ---------------------------------------------------------------------------
// Text formats

inline std::string point_cloud_to_csv(const PointCloud& cloud)
{
    std::string out;
    for (std::size_t a = 0; a < cloud.dim(); ++a) {
        if (a)
            out += ',';
        out += 'x';
        out += std::to_string(a);
    }
    out += '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t a = 0; a < cloud.dim(); ++a) {
            if (a)
                out += ',';
            out += format_double(cloud.coord(i, a));
        }
        out += '\n';
    }
    return out;
}

inline PointCloud point_cloud_from_csv(std::string_view text, Metric metric = Metric::euclidean())
{
    std::vector<std::string> lines = split(text, '\n');
    while (!lines.empty() && trim(lines.back()).empty())
        lines.pop_back();
    if (lines.empty())
        fail(ErrorKind::InvalidInput, "point cloud CSV has no header");
    const auto header = split(trim(lines.front()), ',');
    for (std::size_t a = 0; a < header.size(); ++a)
        if (trim(header[a]) != "x" + std::to_string(a))
            fail(ErrorKind::InvalidInput, "point cloud CSV header must be x0,x1,...");
    PointCloud cloud(header.size(), std::move(metric));
    std::vector<double> p(header.size());
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto fields = split(trim(lines[l]), ',');
        if (fields.size() != header.size())
            fail(ErrorKind::InvalidInput, "row " + std::to_string(l) + " has the wrong number of fields");
        for (std::size_t a = 0; a < fields.size(); ++a)
            p[a] = parse_double(fields[a]);
        cloud.push_back(p);
    }
    return cloud;
}

/// Debug dump, one `value,dim,v0,v1,...` row per simplex in filtration order.
inline std::string filtration_to_csv(const Filtration& f)
{
    std::string out = "value,dim";
    for (int v = 0; v <= f.dim_max; ++v)
        out += ",v" + std::to_string(v);
    out += '\n';
    for (const Simplex& s : f.simplices) {
        out += format_double(s.value);
        out += ',';
        out += std::to_string(s.dim());
        for (std::uint32_t v : s.vertices()) {
            out += ',';
            out += std::to_string(v);
        }
        out += '\n';
    }
    return out;
}

} // namespace bettieq
