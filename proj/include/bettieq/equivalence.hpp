#pragma once

// Empirical equivalence bench: excess-mass curves of Z = f_θ(X), two-sample
// KS on pushforward samples, thermodynamic Betti curves, and a pairwise
// comparison report.  Verdicts are statistical: "equivalent-consistent"
// means no recorded statistic crossed its threshold, never a proof.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "bettieq/error.hpp"
#include "bettieq/families.hpp"
#include "bettieq/geom.hpp"
#include "bettieq/homology.hpp"
#include "bettieq/io.hpp"
#include "bettieq/parallel.hpp"
#include "bettieq/random.hpp"

namespace bettieq {

// ---------------------------------------------------------------------------
// Seeds

/// Seed for one parameter value: a hash of the master seed and θ's text form,
/// so results for θ do not depend on which other values are compared.
inline std::uint64_t theta_seed(std::uint64_t master, const Theta& theta)
{
    return mix64(master ^ hash_label(format_theta(theta)));
}

// ---------------------------------------------------------------------------
// Pushforward and excess mass

/// Z_i = f_θ(X_i) for X_i drawn by `sample(fam, θ, n, seed)`.
inline std::vector<double> pushforward_samples(const Family& fam, const Theta& theta, std::size_t n, std::uint64_t seed)
{
    const PointCloud cloud = sample(fam, theta, n, seed);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = fam.density_unchecked(theta, cloud.point(i).data());
    return z;
}

struct ExcessMassCurve {
    std::vector<double> t_grid;
    std::vector<double> values;
    std::vector<double> std_error;
    std::size_t n = 0;
};

inline void check_grid(const std::vector<double>& t_grid)
{
    if (t_grid.empty())
        fail(ErrorKind::InvalidInput, "threshold grid is empty");
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        if (!std::isfinite(t_grid[j]))
            fail(ErrorKind::InvalidInput, "threshold grid must be finite");
        if (j && !(t_grid[j] > t_grid[j - 1]))
            fail(ErrorKind::InvalidInput, "threshold grid must be strictly increasing");
    }
}

/// Empirical survival function P(Z ≥ t) of given pushforward values.
inline ExcessMassCurve excess_mass_from(std::vector<double> z, const std::vector<double>& t_grid)
{
    check_grid(t_grid);
    std::sort(z.begin(), z.end());
    ExcessMassCurve c;
    c.t_grid = t_grid;
    c.n = z.size();
    const double n = static_cast<double>(z.size());
    for (double t : t_grid) {
        const auto above = static_cast<double>(z.end() - std::lower_bound(z.begin(), z.end(), t));
        const double v = above / n;
        c.values.push_back(v);
        c.std_error.push_back(std::sqrt(v * (1.0 - v) / n));
    }
    return c;
}

/// Monte Carlo excess-mass curve f̂_θ(t) = P(f_θ(X) ≥ t), X ~ f_θ, with
/// binomial standard errors.
inline ExcessMassCurve excess_mass_mc(const Family& fam, const Theta& theta, const std::vector<double>& t_grid,
                                      std::size_t n, std::uint64_t seed)
{
    if (n < 100)
        fail(ErrorKind::InvalidInput, "excess mass needs n >= 100");
    check_grid(t_grid);
    return excess_mass_from(pushforward_samples(fam, theta, n, seed), t_grid);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Asymptotic two-sample critical constants c(α).
inline double ks_critical_constant(double alpha)
{
    static const std::map<double, double> table = {{0.1, 1.2238},  {0.05, 1.3581},  {0.025, 1.4802},
                                                   {0.01, 1.6276}, {0.005, 1.7308}, {0.001, 1.9495}};
    const auto it = table.find(alpha);
    if (it == table.end())
        fail(ErrorKind::InvalidInput, "KS level must be one of 0.1, 0.05, 0.025, 0.01, 0.005, 0.001");
    return it->second;
}

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;
    bool reject = false;
};

/// D = sup_t |F_a(t) − F_b(t)| by merging the sorted samples.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 0.001)
{
    if (a.empty() || b.empty())
        fail(ErrorKind::InvalidInput, "KS test needs non-empty samples");
    if (a.size() < 25 || b.size() < 25)
        fail(ErrorKind::InvalidInput, "KS test needs at least 25 values per sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double m = static_cast<double>(a.size()), n = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == t)
            ++i;
        while (j < b.size() && b[j] == t)
            ++j;
        d = std::max(d, std::abs(i / m - j / n));
    }
    KsResult r;
    r.statistic = d;
    r.critical = ks_critical_constant(alpha) * std::sqrt((m + n) / (m * n));
    r.reject = d > r.critical;
    return r;
}

/// One-sample D = sup_t |F_n(t) − F(t)| against a continuous CDF.
template <class Cdf>
double ks_one_sample(std::vector<double> xs, Cdf&& cdf)
{
    if (xs.empty())
        fail(ErrorKind::InvalidInput, "KS test needs a non-empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

// ---------------------------------------------------------------------------
// Betti curves

struct BettiCurve {
    int k = 0;
    std::vector<double> t_grid;
    std::vector<double> values;
    std::vector<double> std_error;
    std::size_t n = 0;
    std::size_t replications = 0;
    /// raw[rep][j] = β_k at t_grid[j] divided by n.
    std::vector<std::vector<double>> raw;
};

struct BettiOptions {
    std::size_t jobs = 1;
    std::size_t budget = kDefaultSimplexBudget;
    /// Refuse grids with n·V_d·r^d·sup f above this (expected degree proxy).
    double degree_cap = 60.0;
    std::size_t pilot = 2000;
};

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(std::size_t d)
{
    const double h = 0.5 * static_cast<double>(d);
    return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

/// Largest density value over a pilot sample (its own stream).
inline double pilot_sup_density(const Family& fam, const Theta& theta, std::size_t pilot, std::uint64_t seed)
{
    Rng rng(seed, stream_id({hash_label("pilot"), hash_label(format_theta(theta))}));
    const PointCloud cloud = sample(fam, theta, pilot, rng);
    double sup = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        sup = std::max(sup, fam.density_unchecked(theta, cloud.point(i).data()));
    return sup;
}

/// Thermodynamic Betti curves: for each replication, sample n points, build
/// the Čech (Euclidean supports) or Rips (torus) filtration up to
/// r_max = max(t)·n^(−1/d), compute persistence once, and read β_k at every
/// r = t·n^(−1/d).  Returns one curve per k = 0..k_max.
inline std::vector<BettiCurve> betti_curve(const Family& fam, const Theta& theta, std::size_t n,
                                           const std::vector<double>& t_grid, int k_max, std::size_t replications,
                                           std::uint64_t seed, const BettiOptions& opt = {})
{
    fam.validate(theta);
    check_grid(t_grid);
    if (t_grid.front() < 0.0)
        fail(ErrorKind::InvalidInput, "thermodynamic parameters must be non-negative");
    if (k_max < 0 || k_max > 5)
        fail(ErrorKind::InvalidInput, "k_max must lie in 0..5");
    if (n < 1 || replications < 1)
        fail(ErrorKind::InvalidInput, "betti curves need n >= 1 and at least one replication");
    const std::size_t d = fam.dim();
    const double scale = std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d));
    const double r_max = t_grid.back() * scale;
    if (!(r_max > 0.0))
        fail(ErrorKind::InvalidInput, "largest thermodynamic parameter must be positive");

    const double sup_f = pilot_sup_density(fam, theta, opt.pilot, seed);
    const double expected = static_cast<double>(n) * unit_ball_volume(d) * std::pow(r_max, static_cast<double>(d)) * sup_f;
    if (expected > opt.degree_cap)
        fail(ErrorKind::DegreeCapExceeded,
             "t = " + format_double(t_grid.back()) + " gives expected degree proxy " + format_double(expected) +
                 " above the cap " + format_double(opt.degree_cap) + " (sup density estimate " + format_double(sup_f) +
                 "); lower the t grid");

    const std::size_t nk = static_cast<std::size_t>(k_max) + 1;
    const bool torus = fam.support() == SupportKind::Torus;
    // raw[rep][k][j]
    std::vector<std::vector<std::vector<double>>> raw(replications);
    parallel_for(replications, opt.jobs, [&](std::size_t rep) {
        Rng rng(seed, stream_id({hash_label("betti"), rep}));
        const PointCloud cloud = sample(fam, theta, n, rng);
        const Filtration filt = torus ? build_rips_filtration(cloud, r_max, k_max + 1, opt.budget)
                                      : build_cech_filtration(cloud, r_max, k_max + 1, opt.budget);
        const PersistenceDiagram dgm = compute_persistence(filt, k_max);
        auto& out = raw[rep];
        out.assign(nk, std::vector<double>(t_grid.size()));
        for (std::size_t k = 0; k < nk; ++k)
            for (std::size_t j = 0; j < t_grid.size(); ++j)
                out[k][j] = static_cast<double>(betti_at(dgm, std::min(t_grid[j] * scale, r_max), static_cast<int>(k))) /
                            static_cast<double>(n);
    });

    std::vector<BettiCurve> curves(nk);
    const double reps = static_cast<double>(replications);
    for (std::size_t k = 0; k < nk; ++k) {
        BettiCurve& c = curves[k];
        c.k = static_cast<int>(k);
        c.t_grid = t_grid;
        c.n = n;
        c.replications = replications;
        for (std::size_t rep = 0; rep < replications; ++rep)
            c.raw.push_back(raw[rep][k]);
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            double s = 0.0;
            for (std::size_t rep = 0; rep < replications; ++rep)
                s += raw[rep][k][j];
            const double mean = s / reps;
            double ss = 0.0;
            for (std::size_t rep = 0; rep < replications; ++rep)
                ss += (raw[rep][k][j] - mean) * (raw[rep][k][j] - mean);
            c.values.push_back(mean);
            c.std_error.push_back(replications > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0);
        }
    }
    return curves;
}

/// Largest |a − b| / sqrt(se_a² + se_b²) over the grid.  A difference with
/// zero pooled error counts as infinite.
inline double max_standardized_gap(const std::vector<double>& a, const std::vector<double>& se_a,
                                   const std::vector<double>& b, const std::vector<double>& se_b)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = std::abs(a[j] - b[j]);
        const double pooled = std::hypot(se_a[j], se_b[j]);
        if (diff == 0.0)
            continue;
        worst = std::max(worst, pooled > 0.0 ? diff / pooled : std::numeric_limits<double>::infinity());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Comparison report

enum class Verdict { EquivalentConsistent, Separated, Inconclusive };

inline std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::EquivalentConsistent: return "equivalent-consistent";
    case Verdict::Separated: return "separated";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

inline Verdict parse_verdict(std::string_view s)
{
    if (s == "equivalent-consistent")
        return Verdict::EquivalentConsistent;
    if (s == "separated")
        return Verdict::Separated;
    if (s == "inconclusive")
        return Verdict::Inconclusive;
    fail(ErrorKind::InvalidInput, "unknown verdict '" + std::string(s) + "'");
}

/// Below threshold: consistent; above margin·threshold: separated.
inline Verdict classify(double value, double threshold, double margin)
{
    if (value <= threshold)
        return Verdict::EquivalentConsistent;
    if (value > margin * threshold)
        return Verdict::Separated;
    return Verdict::Inconclusive;
}

struct CompareConfig {
    std::uint64_t seed = 1;
    std::size_t n_pushforward = 100000;
    double ks_alpha = 0.001;
    /// Excess-mass grid; empty means 19 quantiles (5%..95%) of the pooled Z.
    std::vector<double> em_t_grid;
    double em_threshold = 5.0;
    /// Betti-curve stage runs when betti_replications > 0.
    std::size_t betti_n = 2000;
    std::size_t betti_replications = 0;
    std::vector<double> betti_t_grid;
    int betti_k_max = 1;
    double betti_threshold = 5.0;
    double margin = 1.5;
    BettiOptions betti;
};

struct ReportRow {
    std::string stat;
    double value;
    double threshold;
    Verdict verdict;
};

struct PairReport {
    Theta a, b;
    std::vector<ReportRow> rows;
    Verdict verdict = Verdict::EquivalentConsistent;
};

struct EquivalenceReport {
    std::string family;
    std::vector<Theta> thetas; // canonical (sorted) order
    std::vector<PairReport> pairs;
    std::vector<ExcessMassCurve> excess_mass; // per θ
    std::vector<std::vector<BettiCurve>> betti; // per θ, empty if not run

    /// Worst verdict over all pairs (separated > inconclusive > consistent).
    Verdict overall() const
    {
        Verdict v = Verdict::EquivalentConsistent;
        for (const auto& p : pairs) {
            if (p.verdict == Verdict::Separated)
                return Verdict::Separated;
            if (p.verdict == Verdict::Inconclusive)
                v = Verdict::Inconclusive;
        }
        return v;
    }
};

namespace detail {

inline Verdict combine(const std::vector<ReportRow>& rows)
{
    bool any_inconclusive = false;
    for (const auto& r : rows) {
        if (r.verdict == Verdict::Separated)
            return Verdict::Separated;
        any_inconclusive |= r.verdict == Verdict::Inconclusive;
    }
    return any_inconclusive ? Verdict::Inconclusive : Verdict::EquivalentConsistent;
}

} // namespace detail

/// The 5%, 10%, ..., 95% quantiles of the pooled samples, with duplicates
/// dropped so the grid stays strictly increasing.
inline std::vector<double> pooled_quantile_grid(const std::vector<std::vector<double>>& samples)
{
    std::vector<double> pooled;
    for (const auto& s : samples)
        pooled.insert(pooled.end(), s.begin(), s.end());
    if (pooled.empty())
        fail(ErrorKind::InvalidInput, "quantile grid needs at least one sample value");
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> grid;
    for (int q = 1; q <= 19; ++q) {
        const double v = pooled[static_cast<std::size_t>(q * 0.05 * static_cast<double>(pooled.size() - 1))];
        if (grid.empty() || v > grid.back())
            grid.push_back(v);
    }
    return grid;
}

/// Pairwise comparison of f_θ over θ_list.  θ values are put in canonical
/// order and each gets its own seed from `theta_seed`, so the report does not
/// depend on the order of θ_list.
inline EquivalenceReport compare(const Family& fam, std::vector<Theta> thetas, const CompareConfig& cfg)
{
    if (thetas.size() < 2)
        fail(ErrorKind::InvalidInput, "comparison needs at least two parameter values");
    for (const auto& t : thetas)
        fam.validate(t);
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());
    if (thetas.size() < 2) // all values equal: compare θ with itself
        thetas.push_back(thetas.front());
    ks_critical_constant(cfg.ks_alpha);

    EquivalenceReport rep;
    rep.family = fam.spec();
    rep.thetas = thetas;
    const std::size_t m = thetas.size();

    std::vector<std::vector<double>> z(m);
    for (std::size_t i = 0; i < m; ++i)
        z[i] = pushforward_samples(fam, thetas[i], cfg.n_pushforward, theta_seed(cfg.seed, thetas[i]));

    const std::vector<double> grid = cfg.em_t_grid.empty() ? pooled_quantile_grid(z) : cfg.em_t_grid;
    for (std::size_t i = 0; i < m; ++i)
        rep.excess_mass.push_back(excess_mass_from(z[i], grid));

    if (cfg.betti_replications > 0) {
        for (std::size_t i = 0; i < m; ++i)
            rep.betti.push_back(betti_curve(fam, thetas[i], cfg.betti_n, cfg.betti_t_grid, cfg.betti_k_max,
                                            cfg.betti_replications, theta_seed(cfg.seed, thetas[i]), cfg.betti));
    }

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            PairReport pr;
            pr.a = thetas[i];
            pr.b = thetas[j];
            const KsResult ks = ks_two_sample(z[i], z[j], cfg.ks_alpha);
            pr.rows.push_back({"ks", ks.statistic, ks.critical, classify(ks.statistic, ks.critical, cfg.margin)});
            const auto& ea = rep.excess_mass[i];
            const auto& eb = rep.excess_mass[j];
            const double em_gap = max_standardized_gap(ea.values, ea.std_error, eb.values, eb.std_error);
            pr.rows.push_back({"excess_mass_gap", em_gap, cfg.em_threshold, classify(em_gap, cfg.em_threshold, cfg.margin)});
            if (!rep.betti.empty()) {
                for (std::size_t k = 0; k < rep.betti[i].size(); ++k) {
                    const auto& ba = rep.betti[i][k];
                    const auto& bb = rep.betti[j][k];
                    const double gap = max_standardized_gap(ba.values, ba.std_error, bb.values, bb.std_error);
                    pr.rows.push_back({"betti" + std::to_string(k) + "_gap", gap, cfg.betti_threshold,
                                       classify(gap, cfg.betti_threshold, cfg.margin)});
                }
            }
            pr.verdict = detail::combine(pr.rows);
            rep.pairs.push_back(std::move(pr));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string excess_mass_to_csv(const std::vector<std::pair<Theta, ExcessMassCurve>>& curves)
{
    std::string out = "theta,t,value,stderr,n\n";
    for (const auto& [theta, c] : curves)
        for (std::size_t j = 0; j < c.t_grid.size(); ++j)
            out += format_theta(theta) + ',' + format_double(c.t_grid[j]) + ',' + format_double(c.values[j]) + ',' +
                   format_double(c.std_error[j]) + ',' + std::to_string(c.n) + '\n';
    return out;
}

inline std::string betti_to_csv(const std::vector<std::pair<Theta, std::vector<BettiCurve>>>& curves)
{
    std::string out = "theta,k,t,mean,stderr,n,reps\n";
    for (const auto& [theta, per_k] : curves)
        for (const auto& c : per_k)
            for (std::size_t j = 0; j < c.t_grid.size(); ++j)
                out += format_theta(theta) + ',' + std::to_string(c.k) + ',' + format_double(c.t_grid[j]) + ',' +
                       format_double(c.values[j]) + ',' + format_double(c.std_error[j]) + ',' + std::to_string(c.n) +
                       ',' + std::to_string(c.replications) + '\n';
    return out;
}

/// Per-replication values: theta,k,t,replication,value.
inline std::string betti_raw_to_csv(const std::vector<std::pair<Theta, std::vector<BettiCurve>>>& curves)
{
    std::string out = "theta,k,t,replication,value\n";
    for (const auto& [theta, per_k] : curves)
        for (const auto& c : per_k)
            for (std::size_t rep = 0; rep < c.raw.size(); ++rep)
                for (std::size_t j = 0; j < c.t_grid.size(); ++j)
                    out += format_theta(theta) + ',' + std::to_string(c.k) + ',' + format_double(c.t_grid[j]) + ',' +
                           std::to_string(rep) + ',' + format_double(c.raw[rep][j]) + '\n';
    return out;
}

/// One row per statistic plus an `overall` row per pair.
inline std::string report_to_csv(const EquivalenceReport& rep)
{
    std::string out = "theta_a,theta_b,stat,value,threshold,verdict\n";
    for (const auto& p : rep.pairs) {
        const std::string head = format_theta(p.a) + ',' + format_theta(p.b) + ',';
        for (const auto& r : p.rows)
            out += head + r.stat + ',' + format_double(r.value) + ',' + format_double(r.threshold) + ',' +
                   to_string(r.verdict) + '\n';
        out += head + "overall,,," + to_string(p.verdict) + '\n';
    }
    return out;
}

} // namespace bettieq
