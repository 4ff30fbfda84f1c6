#pragma once

// Command-line harness.  Every subcommand reads an optional sectioned
// key = value config file, overlays command-line flags, validates all keys
// and writes CSV files into an output directory.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical
// failure, 4 verdict mismatch.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bettieq/equivalence.hpp"
#include "bettieq/error.hpp"
#include "bettieq/families.hpp"
#include "bettieq/invariance.hpp"
#include "bettieq/io.hpp"
#include "bettieq/parallel.hpp"
#include "bettieq/regimes.hpp"

namespace bettieq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitMismatch = 4;

struct KeySpec {
    std::string name;
    std::string default_value;
    std::string help;
    bool flag = false;
};

/// Sections in canonical order; "common" keys are valid in every command.
inline const std::vector<std::pair<std::string, std::vector<KeySpec>>>& config_schema()
{
    static const std::vector<std::pair<std::string, std::vector<KeySpec>>> schema = {
        {"common",
         {{"seed", "", "master seed (falls back to BETTIEQ_SEED, then 1)"},
          {"out", "bettieq_out", "output directory"},
          {"jobs", "1", "worker threads"},
          {"gnuplot", "false", "also write whitespace-separated .dat files", true}}},
        {"sample",
         {{"family", "", "family spec, e.g. location:g=uniform,dim=2"},
          {"theta", "", "parameter values separated by ';'"},
          {"n", "1000", "points per cloud"},
          {"replications", "1", "clouds per parameter value"}}},
        {"betti",
         {{"family", "", "family spec"},
          {"theta", "", "parameter values separated by ';'"},
          {"n", "2000", "points per replication"},
          {"replications", "20", "replications per parameter value"},
          {"t_min", "0.05", "smallest thermodynamic parameter"},
          {"t_max", "0.6", "largest thermodynamic parameter"},
          {"t_steps", "12", "grid size"},
          {"k_max", "1", "largest homology degree"},
          {"degree_cap", "60", "expected-degree cap"},
          {"budget", "20000000", "simplex budget"},
          {"raw", "false", "also write per-replication values", true}}},
        {"excess-mass",
         {{"family", "", "family spec"},
          {"theta", "", "parameter values separated by ';'"},
          {"n", "100000", "samples per parameter value"},
          {"t_min", "", "smallest level (empty: pooled quantiles)"},
          {"t_max", "", "largest level"},
          {"t_steps", "", "grid size"}}},
        {"equiv",
         {{"family", "", "family spec"},
          {"theta", "", "parameter values separated by ';'"},
          {"n", "100000", "pushforward samples per parameter value"},
          {"ks_alpha", "0.001", "KS level"},
          {"em_threshold", "5", "excess-mass gap threshold (pooled standard errors)"},
          {"betti_n", "2000", "points per Betti replication"},
          {"betti_replications", "0", "Betti replications (0 skips the Betti stage)"},
          {"t_min", "0.05", "smallest thermodynamic parameter"},
          {"t_max", "0.6", "largest thermodynamic parameter"},
          {"t_steps", "12", "grid size"},
          {"k_max", "1", "largest homology degree"},
          {"betti_threshold", "5", "Betti gap threshold (pooled standard errors)"},
          {"margin", "1.5", "separation margin factor"},
          {"degree_cap", "60", "expected-degree cap"},
          {"expect", "", "expected verdict for every pair"}}},
        {"verify", {{"only", "", "run checks whose name or family contains this text"}}},
        {"regimes",
         {{"family", "location:g=uniform,dim=2", "family spec"},
          {"theta", "0:0", "parameter value"},
          {"n_list", "500;1000;2000;4000", "sample sizes separated by ';'"},
          {"sparse_c", "1", "sparse schedule constant"},
          {"thermodynamic_c", "0.5", "thermodynamic schedule constant"},
          {"dense_c", "1", "dense schedule constant"},
          {"replications", "5", "replications per size"}}},
        {"manifest", {}},
    };
    return schema;
}

inline const std::vector<KeySpec>* section_keys(const std::string& section)
{
    for (const auto& [name, keys] : config_schema())
        if (name == section)
            return &keys;
    return nullptr;
}

inline const KeySpec* find_key(const std::string& section, const std::string& key)
{
    for (const std::string& s : {std::string("common"), section}) {
        const auto* keys = section_keys(s);
        if (!keys)
            continue;
        for (const auto& k : *keys)
            if (k.name == key)
                return &k;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Config files

struct ExperimentConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses "[section]" headers and "key = value" lines; '#' starts a comment
/// line.  Unknown sections, unknown keys and duplicates are ConfigErrors.
inline ExperimentConfig parse_config(std::string_view text)
{
    ExperimentConfig cfg;
    std::string section;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        const std::string line = trim(raw);
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.empty() || line[0] == '#')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorKind::ConfigError, where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!section_keys(section))
                fail(ErrorKind::ConfigError, where + "unknown section [" + section + "]");
            cfg.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::ConfigError, where + "expected key = value");
        if (section.empty())
            fail(ErrorKind::ConfigError, where + "key outside a section");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!find_key(section, key))
            fail(ErrorKind::ConfigError, where + "unknown key '" + key + "' in [" + section + "]");
        if (!cfg.sections[section].emplace(key, value).second)
            fail(ErrorKind::ConfigError, where + "duplicate key '" + key + "'");
    }
    return cfg;
}

/// Canonical text: sections in schema order, keys sorted.
inline std::string serialize_config(const ExperimentConfig& cfg)
{
    std::string out;
    for (const auto& [name, keys] : config_schema()) {
        const auto it = cfg.sections.find(name);
        if (it == cfg.sections.end())
            continue;
        if (!out.empty())
            out += '\n';
        out += '[' + name + "]\n";
        for (const auto& [k, v] : it->second)
            out += k + " = " + v + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resolved settings

/// Final key values for one command: defaults, then [common], then the
/// command's section, then flags.
class Settings {
public:
    Settings(std::string command, std::map<std::string, std::string> values)
        : command_(std::move(command)), values_(std::move(values))
    {
    }

    const std::string& command() const { return command_; }

    std::string str(const std::string& key) const
    {
        const auto it = values_.find(key);
        return it == values_.end() ? std::string() : it->second;
    }

    std::string required(const std::string& key) const
    {
        std::string v = str(key);
        if (v.empty())
            fail(ErrorKind::ConfigError, command_ + " needs '" + key + "'");
        return v;
    }

    double number(const std::string& key) const
    {
        try {
            return parse_double(required(key));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ConfigError)
                throw;
            fail(ErrorKind::ConfigError, "'" + key + "' must be a number, got '" + str(key) + "'");
        }
    }

    std::size_t count(const std::string& key, std::size_t min = 0) const
    {
        const std::string v = required(key);
        std::size_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size() || out < min)
            fail(ErrorKind::ConfigError,
                 "'" + key + "' must be an integer >= " + std::to_string(min) + ", got '" + v + "'");
        return out;
    }

    bool flag(const std::string& key) const
    {
        const std::string v = str(key);
        if (v == "true" || v == "1" || v == "yes")
            return true;
        if (v.empty() || v == "false" || v == "0" || v == "no")
            return false;
        fail(ErrorKind::ConfigError, "'" + key + "' must be true or false, got '" + v + "'");
    }

    std::uint64_t seed() const
    {
        std::string v = str("seed");
        if (v.empty()) {
            const char* env = std::getenv("BETTIEQ_SEED");
            v = env ? env : "1";
        }
        std::uint64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            fail(ErrorKind::ConfigError, "seed must be an unsigned integer, got '" + v + "'");
        return out;
    }

    std::vector<Theta> thetas() const
    {
        std::vector<Theta> out;
        for (const auto& part : split(required("theta"), ';')) {
            const std::string t = trim(part);
            if (!t.empty())
                out.push_back(parse_theta(t));
        }
        if (out.empty())
            fail(ErrorKind::ConfigError, "'theta' lists no parameter values");
        return out;
    }

    /// Evenly spaced grid from t_min, t_max and t_steps; empty when all three
    /// are unset.
    std::vector<double> t_grid() const
    {
        if (str("t_min").empty() && str("t_max").empty() && str("t_steps").empty())
            return {};
        const double lo = number("t_min"), hi = number("t_max");
        const std::size_t steps = count("t_steps", 1);
        if (steps == 1)
            return {lo};
        if (!(hi > lo))
            fail(ErrorKind::ConfigError, "t_max must exceed t_min");
        std::vector<double> grid(steps);
        for (std::size_t j = 0; j < steps; ++j)
            grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(steps - 1);
        return grid;
    }

    std::filesystem::path out_dir() const
    {
        const std::filesystem::path dir = required("out");
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            fail(ErrorKind::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
        return dir;
    }

private:
    std::string command_;
    std::map<std::string, std::string> values_;
};

namespace detail {

inline std::string file_tag(const Theta& theta)
{
    std::string s = format_theta(theta);
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-'))
            c = '_';
    return s;
}

inline void emit(const std::filesystem::path& path, const std::string& content, std::ostream& out)
{
    write_file(path.string(), content);
    out << "wrote " << path.string() << '\n';
}

inline BettiOptions betti_options(const Settings& s)
{
    BettiOptions opt;
    opt.jobs = s.count("jobs", 1);
    opt.degree_cap = s.number("degree_cap");
    if (!s.str("budget").empty())
        opt.budget = s.count("budget", 1);
    return opt;
}

inline int k_max(const Settings& s)
{
    const std::size_t k = s.count("k_max");
    if (k > 5)
        fail(ErrorKind::ConfigError, "k_max must lie in 0..5");
    return static_cast<int>(k);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline int cmd_sample(const Settings& s, std::ostream& out)
{
    const FamilyPtr fam = make_family(s.required("family"));
    const auto thetas = s.thetas();
    const std::size_t n = s.count("n", 1), reps = s.count("replications", 1);
    for (const auto& t : thetas)
        fam->validate(t);
    const auto dir = s.out_dir();
    const std::uint64_t seed = s.seed();
    for (const auto& theta : thetas) {
        for (std::size_t rep = 0; rep < reps; ++rep) {
            Rng rng(seed, stream_id({hash_label("sample"), hash_label(format_theta(theta)), rep}));
            SampleStats stats;
            const PointCloud cloud = sample(*fam, theta, n, rng, &stats);
            std::vector<double> mean(cloud.dim(), 0.0);
            for (std::size_t i = 0; i < cloud.size(); ++i)
                for (std::size_t a = 0; a < cloud.dim(); ++a)
                    mean[a] += cloud.coord(i, a) / static_cast<double>(n);
            out << "theta=" << format_theta(theta) << " rep=" << rep << " n=" << n << " mean=" << format_point(mean)
                << " acceptance=" << format_double(stats.rejection.acceptance_rate()) << '\n';
            detail::emit(dir / ("sample_" + detail::file_tag(theta) + "_rep" + std::to_string(rep) + ".csv"),
                         point_cloud_to_csv(cloud), out);
        }
    }
    return kExitOk;
}

inline int cmd_betti(const Settings& s, std::ostream& out)
{
    const FamilyPtr fam = make_family(s.required("family"));
    const auto thetas = s.thetas();
    const std::size_t n = s.count("n", 1), reps = s.count("replications", 1);
    const auto grid = s.t_grid();
    if (grid.empty())
        fail(ErrorKind::ConfigError, "betti needs t_min, t_max and t_steps");
    const int k_max = detail::k_max(s);
    const auto opt = detail::betti_options(s);
    const std::uint64_t seed = s.seed();
    const auto dir = s.out_dir();
    std::vector<std::pair<Theta, std::vector<BettiCurve>>> curves;
    for (const auto& theta : thetas) {
        curves.emplace_back(theta, betti_curve(*fam, theta, n, grid, k_max, reps, theta_seed(seed, theta), opt));
        out << "theta=" << format_theta(theta) << " done (" << reps << " replications)\n";
    }
    detail::emit(dir / "betti.csv", betti_to_csv(curves), out);
    if (s.flag("raw"))
        detail::emit(dir / "betti_raw.csv", betti_raw_to_csv(curves), out);
    if (s.flag("gnuplot")) {
        for (int k = 0; k <= k_max; ++k) {
            std::string dat = "# t";
            for (const auto& [theta, cs] : curves)
                dat += " mean[" + format_theta(theta) + "] stderr[" + format_theta(theta) + "]";
            dat += '\n';
            for (std::size_t j = 0; j < grid.size(); ++j) {
                dat += format_double(grid[j]);
                for (const auto& [theta, cs] : curves)
                    dat += ' ' + format_double(cs[k].values[j]) + ' ' + format_double(cs[k].std_error[j]);
                dat += '\n';
            }
            detail::emit(dir / ("betti_k" + std::to_string(k) + ".dat"), dat, out);
        }
    }
    return kExitOk;
}

inline int cmd_excess_mass(const Settings& s, std::ostream& out)
{
    const FamilyPtr fam = make_family(s.required("family"));
    const auto thetas = s.thetas();
    const std::size_t n = s.count("n", 100);
    std::vector<double> grid = s.t_grid();
    const std::uint64_t seed = s.seed();
    const auto dir = s.out_dir();
    std::vector<std::vector<double>> z(thetas.size());
    parallel_for(thetas.size(), s.count("jobs", 1),
                 [&](std::size_t i) { z[i] = pushforward_samples(*fam, thetas[i], n, theta_seed(seed, thetas[i])); });
    if (grid.empty())
        grid = pooled_quantile_grid(z);
    std::vector<std::pair<Theta, ExcessMassCurve>> curves;
    for (std::size_t i = 0; i < thetas.size(); ++i)
        curves.emplace_back(thetas[i], excess_mass_from(z[i], grid));
    detail::emit(dir / "excess_mass.csv", excess_mass_to_csv(curves), out);
    if (s.flag("gnuplot")) {
        std::string dat = "# t";
        for (const auto& [theta, c] : curves)
            dat += " value[" + format_theta(theta) + "] stderr[" + format_theta(theta) + "]";
        dat += '\n';
        for (std::size_t j = 0; j < grid.size(); ++j) {
            dat += format_double(grid[j]);
            for (const auto& [theta, c] : curves)
                dat += ' ' + format_double(c.values[j]) + ' ' + format_double(c.std_error[j]);
            dat += '\n';
        }
        detail::emit(dir / "excess_mass.dat", dat, out);
    }
    return kExitOk;
}

inline int cmd_equiv(const Settings& s, std::ostream& out)
{
    const FamilyPtr fam = make_family(s.required("family"));
    CompareConfig cfg;
    cfg.seed = s.seed();
    cfg.n_pushforward = s.count("n", 25);
    cfg.ks_alpha = s.number("ks_alpha");
    cfg.em_threshold = s.number("em_threshold");
    cfg.betti_n = s.count("betti_n", 1);
    cfg.betti_replications = s.count("betti_replications");
    cfg.betti_t_grid = s.t_grid();
    cfg.betti_k_max = detail::k_max(s);
    cfg.betti_threshold = s.number("betti_threshold");
    cfg.margin = s.number("margin");
    cfg.betti = detail::betti_options(s);
    const std::string expect_text = s.str("expect");
    const bool has_expect = !expect_text.empty();
    const Verdict expect = has_expect ? parse_verdict(expect_text) : Verdict::EquivalentConsistent;
    const auto thetas = s.thetas();
    const auto dir = s.out_dir();

    const EquivalenceReport rep = compare(*fam, thetas, cfg);
    detail::emit(dir / "report.csv", report_to_csv(rep), out);
    std::vector<std::pair<Theta, ExcessMassCurve>> em;
    for (std::size_t i = 0; i < rep.thetas.size(); ++i)
        em.emplace_back(rep.thetas[i], rep.excess_mass[i]);
    detail::emit(dir / "excess_mass.csv", excess_mass_to_csv(em), out);
    if (!rep.betti.empty()) {
        std::vector<std::pair<Theta, std::vector<BettiCurve>>> bc;
        for (std::size_t i = 0; i < rep.thetas.size(); ++i)
            bc.emplace_back(rep.thetas[i], rep.betti[i]);
        detail::emit(dir / "betti.csv", betti_to_csv(bc), out);
    }
    bool mismatch = false;
    for (const auto& p : rep.pairs) {
        out << format_theta(p.a) << " vs " << format_theta(p.b) << ": " << to_string(p.verdict);
        if (has_expect && p.verdict != expect) {
            out << " (expected " << to_string(expect) << ")";
            mismatch = true;
        }
        out << '\n';
    }
    out << "overall: " << to_string(rep.overall());
    if (rep.overall() == Verdict::EquivalentConsistent)
        out << " (Monte Carlo evidence consistent with equivalence, not a proof)";
    out << '\n';
    return mismatch ? kExitMismatch : kExitOk;
}

inline int cmd_verify(const Settings& s, std::ostream& out)
{
    const std::string only = s.str("only");
    std::vector<StandardCheck> checks;
    for (auto& c : standard_checks())
        if (only.empty() || c.name.find(only) != std::string::npos || c.family.find(only) != std::string::npos)
            checks.push_back(std::move(c));
    if (checks.empty())
        fail(ErrorKind::ConfigError, "no check matches '" + only + "'");
    const std::uint64_t seed = s.seed();
    const auto dir = s.out_dir();
    std::vector<CheckResult> results(checks.size());
    parallel_for(checks.size(), s.count("jobs", 1), [&](std::size_t i) { results[i] = checks[i].run(seed); });
    detail::emit(dir / "checks.csv", check_results_to_csv(results), out);
    bool mismatch = false;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const bool ok = results[i].pass == checks[i].expect_pass;
        mismatch |= !ok;
        out << (results[i].pass ? "pass " : "fail ") << checks[i].name << ' ' << checks[i].family << ' '
            << checks[i].theta << " violation=" << format_double(results[i].max_violation)
            << (ok ? "" : checks[i].expect_pass ? "  UNEXPECTED FAILURE" : "  CONTROL DID NOT FAIL") << '\n';
    }
    return mismatch ? kExitMismatch : kExitOk;
}

inline int cmd_regimes(const Settings& s, std::ostream& out)
{
    const FamilyPtr fam = make_family(s.required("family"));
    const auto thetas = s.thetas();
    if (thetas.size() != 1)
        fail(ErrorKind::ConfigError, "regimes takes a single parameter value");
    RegimeConfig cfg;
    cfg.n_list.clear();
    for (const auto& part : split(s.required("n_list"), ';')) {
        const std::string t = trim(part);
        if (t.empty())
            continue;
        std::size_t v = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size() || v < 2)
            fail(ErrorKind::ConfigError, "n_list entries must be integers >= 2, got '" + t + "'");
        cfg.n_list.push_back(v);
    }
    cfg.sparse_c = s.number("sparse_c");
    cfg.thermodynamic_c = s.number("thermodynamic_c");
    cfg.dense_c = s.number("dense_c");
    cfg.replications = s.count("replications", 1);
    cfg.seed = s.seed();
    cfg.jobs = s.count("jobs", 1);
    const auto dir = s.out_dir();
    const auto pts = regime_sweep(*fam, thetas[0], cfg);
    detail::emit(dir / "regimes.csv", regimes_to_csv(pts), out);
    for (const auto& p : pts)
        out << to_string(p.schedule) << " n=" << p.n << " r=" << format_double(p.r)
            << " edges=" << format_double(p.edges_mean) << " beta0/n=" << format_double(p.beta0_over_n) << '\n';
    if (s.flag("gnuplot")) {
        for (Schedule sch : {Schedule::Sparse, Schedule::Thermodynamic, Schedule::Dense}) {
            std::string dat = "# n r edges_mean beta0_mean beta0_over_n stderr\n";
            for (const auto& p : pts)
                if (p.schedule == sch)
                    dat += std::to_string(p.n) + ' ' + format_double(p.r) + ' ' + format_double(p.edges_mean) + ' ' +
                           format_double(p.beta0_mean) + ' ' + format_double(p.beta0_over_n) + ' ' +
                           format_double(p.std_error) + '\n';
            detail::emit(dir / ("regimes_" + to_string(sch) + ".dat"), dat, out);
        }
    }
    return kExitOk;
}

inline int cmd_manifest(const Settings&, std::ostream& out)
{
    out << family_manifest_json() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidParam:
    case ErrorKind::ConfigError:
    case ErrorKind::IoError: return kExitConfig;
    default: return kExitNumerical;
    }
}

/// Runs one command line (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Empirical Betti-equivalence toolkit: sampling, Betti curves, equivalence tests and invariance "
                 "checks"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    struct Command {
        std::string name;
        CLI::App* app;
        std::string config_path;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
    };
    std::vector<std::unique_ptr<Command>> commands;
    const std::map<std::string, std::string> descriptions = {
        {"sample", "draw point clouds"},
        {"betti", "estimate thermodynamic Betti curves"},
        {"excess-mass", "Monte Carlo excess-mass curves"},
        {"equiv", "compare parameter values and report verdicts"},
        {"verify", "run the invariance checks with expected outcomes"},
        {"regimes", "edge counts and beta_0 along sparse, thermodynamic and dense radius schedules"},
        {"manifest", "print the family manifest as JSON"},
    };
    for (const auto& [name, keys] : config_schema()) {
        if (name == "common")
            continue;
        auto cmd = std::make_unique<Command>();
        cmd->name = name;
        cmd->app = app.add_subcommand(name, descriptions.at(name));
        cmd->app->add_option("--config", cmd->config_path, "config file with [common] and [" + name + "] sections");
        std::vector<KeySpec> all = *section_keys("common");
        all.insert(all.end(), keys.begin(), keys.end());
        for (const auto& k : all) {
            std::string names = "--" + k.name;
            std::string dashed = k.name;
            std::replace(dashed.begin(), dashed.end(), '_', '-');
            if (dashed != k.name)
                names += ",--" + dashed;
            std::string help = k.help;
            if (!k.default_value.empty())
                help += " [" + k.default_value + "]";
            if (k.flag)
                cmd->app->add_flag(names, cmd->flags[k.name], help);
            else
                cmd->app->add_option(names, cmd->values[k.name], help);
        }
        commands.push_back(std::move(cmd));
    }

    std::vector<std::string> argv_store{"bettieq"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        for (const auto& cmd : commands) {
            if (!cmd->app->parsed())
                continue;
            std::map<std::string, std::string> values;
            std::vector<KeySpec> all = *section_keys("common");
            const auto* own = section_keys(cmd->name);
            all.insert(all.end(), own->begin(), own->end());
            for (const auto& k : all)
                values[k.name] = k.default_value;
            if (!cmd->config_path.empty()) {
                const ExperimentConfig file = parse_config(read_file(cmd->config_path));
                for (const std::string& section : {std::string("common"), cmd->name}) {
                    const auto it = file.sections.find(section);
                    if (it != file.sections.end())
                        for (const auto& [k, v] : it->second)
                            values[k] = v;
                }
            }
            for (const auto& k : all) {
                const std::string flag = "--" + k.name;
                if (cmd->app->count(flag) == 0)
                    continue;
                values[k.name] = k.flag ? (cmd->flags[k.name] ? "true" : "false") : cmd->values[k.name];
            }
            const Settings s(cmd->name, values);
            if (cmd->name == "sample")
                return cmd_sample(s, out);
            if (cmd->name == "betti")
                return cmd_betti(s, out);
            if (cmd->name == "excess-mass")
                return cmd_excess_mass(s, out);
            if (cmd->name == "equiv")
                return cmd_equiv(s, out);
            if (cmd->name == "verify")
                return cmd_verify(s, out);
            if (cmd->name == "regimes")
                return cmd_regimes(s, out);
            return cmd_manifest(s, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

} // namespace bettieq::cli
