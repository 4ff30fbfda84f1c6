#pragma once

// Asymptotic regimes of the random geometric graph: edge counts and β₀ along
// radius schedules r_n = c·n^(−2/d) (sparse), c·n^(−1/d) (thermodynamic) and
// c·n^(−1/(2d)) (dense).  Radii follow the filtration convention: an edge
// enters at r when d(x, y) ≤ 2r.

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "bettieq/error.hpp"
#include "bettieq/families.hpp"
#include "bettieq/geom.hpp"
#include "bettieq/io.hpp"
#include "bettieq/parallel.hpp"
#include "bettieq/random.hpp"

namespace bettieq {

enum class Schedule { Sparse, Thermodynamic, Dense };

inline std::string to_string(Schedule s)
{
    switch (s) {
    case Schedule::Sparse: return "sparse";
    case Schedule::Thermodynamic: return "thermodynamic";
    case Schedule::Dense: return "dense";
    }
    return "?";
}

/// Exponent e in r_n = c·n^e for intrinsic dimension d.
inline double schedule_exponent(Schedule s, std::size_t d)
{
    const double dd = static_cast<double>(d);
    switch (s) {
    case Schedule::Sparse: return -2.0 / dd;
    case Schedule::Thermodynamic: return -1.0 / dd;
    case Schedule::Dense: return -1.0 / (2.0 * dd);
    }
    return 0.0;
}

struct GraphCounts {
    std::size_t edges = 0;
    std::size_t components = 0;
};

/// Edge count and number of connected components of the graph with edges
/// d(x, y) ≤ 2r.
inline GraphCounts graph_counts(const PointCloud& cloud, double r)
{
    const std::size_t n = cloud.size();
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    GraphCounts c{0, n};
    const auto adj = detail::neighbourhood_graph(cloud, r);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (const auto& nb : adj[i]) {
            ++c.edges;
            const std::uint32_t a = find(i), b = find(nb.index);
            if (a != b) {
                parent[std::max(a, b)] = std::min(a, b);
                --c.components;
            }
        }
    }
    return c;
}

struct RegimeConfig {
    std::vector<std::size_t> n_list{500, 1000, 2000, 4000};
    double sparse_c = 1.0;
    double thermodynamic_c = 0.5;
    double dense_c = 1.0;
    std::size_t replications = 5;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
};

struct RegimePoint {
    Schedule schedule;
    std::size_t n;
    double c;
    double r;
    double edges_mean;
    double beta0_mean;
    double beta0_over_n;
    double std_error; // of β₀/n across replications
};

/// One point per (schedule, n), schedules in sparse, thermodynamic, dense
/// order.  Replication j at size n uses stream ("regimes", n, j) and is
/// shared by the three schedules.
inline std::vector<RegimePoint> regime_sweep(const Family& fam, const Theta& theta, const RegimeConfig& cfg)
{
    fam.validate(theta);
    if (cfg.n_list.empty() || cfg.replications < 1)
        fail(ErrorKind::InvalidInput, "regimes need a non-empty n list and at least one replication");
    const std::size_t d = fam.dim();
    const Schedule schedules[3] = {Schedule::Sparse, Schedule::Thermodynamic, Schedule::Dense};
    const double cs[3] = {cfg.sparse_c, cfg.thermodynamic_c, cfg.dense_c};
    const std::size_t tasks = cfg.n_list.size() * cfg.replications;
    // counts[task][schedule]
    std::vector<std::array<GraphCounts, 3>> counts(tasks);
    parallel_for(tasks, cfg.jobs, [&](std::size_t task) {
        const std::size_t ni = task / cfg.replications, rep = task % cfg.replications;
        const std::size_t n = cfg.n_list[ni];
        Rng rng(cfg.seed, stream_id({hash_label("regimes"), n, rep}));
        const PointCloud cloud = sample(fam, theta, n, rng);
        for (int s = 0; s < 3; ++s) {
            const double r = cs[s] * std::pow(static_cast<double>(n), schedule_exponent(schedules[s], d));
            counts[task][s] = graph_counts(cloud, r);
        }
    });
    std::vector<RegimePoint> out;
    for (int s = 0; s < 3; ++s) {
        for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
            const std::size_t n = cfg.n_list[ni];
            double e = 0.0, b = 0.0, b2 = 0.0;
            for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
                const auto& c = counts[ni * cfg.replications + rep][s];
                const double frac = static_cast<double>(c.components) / static_cast<double>(n);
                e += static_cast<double>(c.edges);
                b += static_cast<double>(c.components);
                b2 += frac * frac;
            }
            const double reps = static_cast<double>(cfg.replications);
            const double mean_frac = b / reps / static_cast<double>(n);
            const double var = reps > 1 ? std::max(0.0, (b2 - reps * mean_frac * mean_frac) / (reps - 1)) : 0.0;
            out.push_back({schedules[s], n, cs[s], cs[s] * std::pow(static_cast<double>(n), schedule_exponent(schedules[s], d)),
                           e / reps, b / reps, mean_frac, std::sqrt(var / reps)});
        }
    }
    return out;
}

inline std::string regimes_to_csv(const std::vector<RegimePoint>& pts)
{
    std::string out = "schedule,n,c,r,edges_mean,beta0_mean,beta0_over_n,stderr\n";
    for (const auto& p : pts)
        out += to_string(p.schedule) + ',' + std::to_string(p.n) + ',' + format_double(p.c) + ',' + format_double(p.r) +
               ',' + format_double(p.edges_mean) + ',' + format_double(p.beta0_mean) + ',' +
               format_double(p.beta0_over_n) + ',' + format_double(p.std_error) + '\n';
    return out;
}

} // namespace bettieq
