// fracrisk command-line front end. Every command ends with one
// "summary command=<name> key=value ..." line on stdout.
// Exit codes: 0 success, 1 tolerance gate or computation failure, 2 usage or config error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracrisk/config.hpp"
#include "fracrisk/dataset.hpp"
#include "fracrisk/errors.hpp"
#include "fracrisk/runs.hpp"
#include "fracrisk/stable.hpp"

using namespace fracrisk;

namespace {

constexpr int kOk = 0;
constexpr int kGateFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Writes to `path`, or to stdout when the path is empty.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw ConfigError("cannot open " + path + " for writing");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void close() {
        if (file_) {
            file_->close();
            if (!*file_) throw std::runtime_error("write failed");
        }
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(8) << v;
    return s.str();
}

struct Common {
    std::size_t workers = 1;
};

struct SampleArgs {
    double alpha = 2.0;
    double skew = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_sample_stable(const SampleArgs& a) {
    if (a.n == 0) throw UsageError("--n must be at least 1");
    if (!(a.alpha > 0.0 && a.alpha <= 2.0)) throw UsageError("--alpha must lie in (0, 2]");
    if (!(a.skew >= -1.0 && a.skew <= 1.0)) throw UsageError("--skew must lie in [-1, 1]");

    RngStream rng = component_stream(a.seed, "cli.sample_stable");
    std::vector<double> draws(a.n);
    for (auto& d : draws) d = sample_standard_stable(a.alpha, a.skew, rng);

    Sink sink(a.out);
    auto& os = sink.stream();
    os << "index,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < draws.size(); ++i) os << i << ',' << draws[i] << '\n';
    sink.close();

    // Two-pass moments; quantiles by nth_element on a copy.
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(a.n);
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var = a.n > 1 ? var / static_cast<double>(a.n - 1) : 0.0;
    auto quantile = [sorted = draws](double q) mutable {
        const auto k = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
        return sorted[k];
    };
    std::cout << "summary command=sample-stable alpha=" << fmt(a.alpha) << " skew=" << fmt(a.skew) << " n=" << a.n
              << " seed=" << a.seed << " mean=" << fmt(mean) << " variance=" << fmt(var)
              << " se_mean=" << fmt(std::sqrt(var / static_cast<double>(a.n))) << " q05=" << fmt(quantile(0.05))
              << " median=" << fmt(quantile(0.5)) << " q95=" << fmt(quantile(0.95)) << " status=OK\n";
    return kOk;
}

RiskKind parse_kind(const std::string& s, RiskKind fallback) {
    if (s.empty()) return fallback;
    if (s == "safety") return RiskKind::safety;
    if (s == "recovery") return RiskKind::recovery;
    throw UsageError("--kind must be safety or recovery");
}

struct ConfigArgs {
    std::string config;
    std::string out;
    std::string kind;
};

int cmd_mc_risk(const ConfigArgs& a, const Common& c) {
    const RunConfig cfg = load_config(a.config);
    const RiskKind kind = parse_kind(a.kind, cfg.kind);
    Stopwatch clock;
    const McTable table = mc_config_table(cfg, kind, c.workers);
    Sink sink(a.out.empty() ? cfg.out_csv : a.out);
    write_mc_csv(table, sink.stream());
    sink.close();
    std::cout << "summary command=mc-risk kind=" << to_string(kind) << " rows=" << table.rows.size()
              << " n_paths=" << cfg.mc_paths << " operational_cap=" << fmt(table.operational_cap)
              << " capped_pairs=" << table.capped_pairs << " non_finite_paths=" << table.non_finite_paths
              << " seconds=" << fmt(clock.seconds()) << " status=OK\n";
    return kOk;
}

int cmd_solve_pde(const ConfigArgs& a) {
    const RunConfig cfg = load_config(a.config);
    const RiskKind kind = parse_kind(a.kind, cfg.kind);
    Stopwatch clock;
    const RiskField field = solve_config(cfg, kind);
    Sink sink(a.out.empty() ? cfg.out_pde_csv : a.out);
    write_field_csv(field, sink.stream());
    sink.close();
    const FieldStats st = field_stats(field);
    std::cout << "summary command=solve-pde kind=" << to_string(kind) << " cells=" << field.grid.size()
              << " times=" << field.n_times() << " min=" << fmt(st.min_value) << " max=" << fmt(st.max_value)
              << " bound_violations=" << st.bound_violations
              << " monotonicity_violations=" << st.monotonicity_violations
              << " linear_solver=" << field.provenance.value("linear_solver", std::string("none"))
              << " seconds=" << fmt(clock.seconds()) << " status=" << (st.ok() ? "OK" : "FAIL") << '\n';
    return st.ok() ? kOk : kGateFailed;
}

int cmd_compare(const ConfigArgs& a, const Common& c) {
    const RunConfig cfg = load_config(a.config);
    const RiskKind kind = parse_kind(a.kind, cfg.kind);
    Stopwatch clock;
    const RiskField field = solve_config(cfg, kind);
    const double pde_seconds = clock.seconds();
    const McTable table = mc_config_table(cfg, kind, c.workers);
    const Comparison cmp = compare_field(field, table, cfg.compare_tolerance, cfg.compare_ci_multiplier);
    Sink sink(a.out.empty() ? cfg.out_csv : a.out);
    write_comparison_csv(cmp, sink.stream());
    sink.close();
    std::cout << "summary command=compare kind=" << to_string(kind) << " rows=" << cmp.rows.size()
              << " max_abs_diff=" << fmt(cmp.max_abs_diff) << " frac_within_ci=" << fmt(cmp.frac_within_ci)
              << " ci_multiplier=" << fmt(cfg.compare_ci_multiplier) << " tolerance=" << fmt(cfg.compare_tolerance)
              << " failures=" << cmp.failures << " pde_seconds=" << fmt(pde_seconds)
              << " seconds=" << fmt(clock.seconds()) << " status=" << (cmp.passed() ? "PASS" : "FAIL") << '\n';
    return cmp.passed() ? kOk : kGateFailed;
}

struct DatasetArgs {
    std::string config;
    std::string out;
    std::size_t n = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_gen_dataset(const DatasetArgs& a, const Common& c) {
    RunConfig cfg = load_config(a.config);
    DatasetSpec spec = dataset_spec(cfg, c.workers);
    if (a.n > 0) spec.n_samples = a.n;
    if (a.seed) spec.seed = *a.seed;
    const std::string out = a.out.empty() ? cfg.out_frsk : a.out;
    if (out.empty()) throw ConfigError("no output path: set output.frsk or pass --out");
    Stopwatch clock;
    const DatasetSummary summary = generate_dataset(spec, out);
    std::cout << "summary command=gen-dataset path=" << out << " n_samples=" << spec.n_samples
              << " failed=" << summary.failed << " digest=" << summary.digest << " seconds=" << fmt(clock.seconds())
              << " status=" << (summary.failed == 0 ? "OK" : "FAIL") << '\n';
    return summary.failed == 0 ? kOk : kGateFailed;
}

struct OodArgs {
    std::string dataset;
    std::string config;
    std::string out;
    OodOptions options;
};

int cmd_ood_eval(OodArgs a, const Common& c) {
    const Dataset ds = read_dataset(a.dataset);
    const DatasetSpec setup = dataset_setup_from_manifest(ds.manifest);
    a.options.workers = c.workers;
    Stopwatch clock;
    const OodReport report = ood_evaluate(setup, a.options);
    Sink sink(a.out);
    write_comparison_csv(report.checks, sink.stream());
    sink.close();
    const std::size_t passed = report.checks.rows.size() - report.checks.failures;
    std::cout << "summary command=ood-eval dataset_digest=" << ds.digest << " cells=" << report.field.grid.size()
              << " checks=" << report.checks.rows.size() << " passed=" << passed
              << " max_abs_diff=" << fmt(report.checks.max_abs_diff) << " tolerance=" << fmt(a.options.tolerance)
              << " seconds=" << fmt(clock.seconds()) << " status=" << (report.checks.passed() ? "PASS" : "FAIL")
              << '\n';
    return report.checks.passed() ? kOk : kGateFailed;
}

void fail_summary(const std::string& command, const char* status, const std::string& what) {
    std::cerr << "error: " << what << '\n';
    std::cout << "summary command=" << (command.empty() ? "none" : command) << " status=" << status << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety and recovery probabilities for fractional stochastic systems"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--workers", common.workers, "Concurrency cap; results do not depend on it")
        ->check(CLI::PositiveNumber);

    SampleArgs sample;
    auto* sub_sample = app.add_subcommand("sample-stable", "Draw standard stable variates (CSV)");
    sub_sample->add_option("--alpha", sample.alpha, "Stability index in (0, 2]")->required();
    sub_sample->add_option("--skew", sample.skew, "Skewness in [-1, 1]");
    sub_sample->add_option("--n", sample.n, "Number of draws")->required();
    sub_sample->add_option("--seed", sample.seed, "Seed");
    sub_sample->add_option("--out", sample.out, "Draws CSV (default stdout)");

    ConfigArgs mc_args, pde_args, cmp_args;
    auto add_config = [](CLI::App* sub, ConfigArgs& args) {
        sub->add_option("--config", args.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", args.out, "Output CSV (default from config, else stdout)");
        sub->add_option("--kind", args.kind, "safety or recovery (default from config)");
    };
    auto* sub_mc = app.add_subcommand("mc-risk", "Monte Carlo estimate table");
    add_config(sub_mc, mc_args);
    auto* sub_pde = app.add_subcommand("solve-pde", "Fractional PDE solve on the configured grid");
    add_config(sub_pde, pde_args);
    auto* sub_cmp = app.add_subcommand("compare", "PDE versus Monte Carlo with a tolerance gate");
    add_config(sub_cmp, cmp_args);

    DatasetArgs ds_args;
    std::uint64_t ds_seed = 0;
    auto* sub_ds = app.add_subcommand("gen-dataset", "Generate an FRSK1 dataset of safety fields");
    sub_ds->add_option("--config", ds_args.config, "Run configuration (JSON)")->required();
    sub_ds->add_option("--out", ds_args.out, "FRSK1 path (default output.frsk)");
    sub_ds->add_option("--n", ds_args.n, "Override dataset.n_samples")->check(CLI::PositiveNumber);
    auto* seed_opt = sub_ds->add_option("--seed", ds_seed, "Override mc.seed");

    OodArgs ood;
    auto* sub_ood = app.add_subcommand("ood-eval", "Solve the out-of-distribution system and spot-check it");
    sub_ood->add_option("--dataset", ood.dataset, "FRSK1 dataset providing the setup")->required();
    sub_ood->add_option("--config", ood.config, "Config whose ood section and mc.seed give defaults");
    sub_ood->add_option("--out", ood.out, "Spot-check CSV (default stdout)");
    OodOptions ood_flags;
    auto* o_cells = sub_ood->add_option("--cells", ood_flags.cells, "Cells per axis for the OOD solve (default 49, 0 = dataset grid)");
    auto* o_points = sub_ood->add_option("--points", ood_flags.points, "Number of spot checks")->check(CLI::PositiveNumber);
    auto* o_paths = sub_ood->add_option("--n-paths", ood_flags.n_paths, "Paths per spot check")->check(CLI::PositiveNumber);
    auto* o_tol = sub_ood->add_option("--tolerance", ood_flags.tolerance, "Absolute tolerance floor");
    auto* o_seed = sub_ood->add_option("--seed", ood_flags.seed, "Seed for spot-check selection and paths");

    std::string command;
    try {
        app.parse(argc, argv);
        command = app.get_subcommands().front()->get_name();
        if (sub_sample->parsed()) return cmd_sample_stable(sample);
        if (sub_mc->parsed()) return cmd_mc_risk(mc_args, common);
        if (sub_pde->parsed()) return cmd_solve_pde(pde_args);
        if (sub_cmp->parsed()) return cmd_compare(cmp_args, common);
        if (sub_ds->parsed()) {
            if (seed_opt->count() > 0) ds_args.seed = ds_seed;
            return cmd_gen_dataset(ds_args, common);
        }
        if (sub_ood->parsed()) {
            ood.options.cells = 49;
            if (!ood.config.empty()) {
                const RunConfig cfg = load_config(ood.config);
                ood.options.cells = cfg.ood_cells.value_or(ood.options.cells);
                ood.options.points = cfg.ood_points;
                ood.options.n_paths = cfg.ood_paths;
                ood.options.tolerance = cfg.ood_tolerance;
                ood.options.seed = cfg.seed;
                ood.options.mc_ds = cfg.mc_ds;
            }
            if (o_cells->count() > 0) ood.options.cells = ood_flags.cells;
            if (o_points->count() > 0) ood.options.points = ood_flags.points;
            if (o_paths->count() > 0) ood.options.n_paths = ood_flags.n_paths;
            if (o_tol->count() > 0) ood.options.tolerance = ood_flags.tolerance;
            if (o_seed->count() > 0) ood.options.seed = ood_flags.seed;
            return cmd_ood_eval(ood, common);
        }
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cout << "summary command=none status=USAGE\n";
        return kUsage;
    } catch (const UsageError& e) {
        fail_summary(command, "USAGE", e.what());
        std::cerr << app.get_subcommand(command)->help();
        return kUsage;
    } catch (const ConfigError& e) {
        fail_summary(command, "CONFIG_ERROR", e.what());
        return kUsage;
    } catch (const DomainError& e) {
        fail_summary(command, "CONFIG_ERROR", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        fail_summary(command, "ERROR", e.what());
        return kGateFailed;
    }
    return kUsage;
}
