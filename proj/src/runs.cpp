#include "fracrisk/runs.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "fracrisk/errors.hpp"
#include "fracrisk/json_io.hpp"

namespace fracrisk {

GeneratorMatrix config_generator(const RunConfig& cfg, RiskKind kind) {
    if (!cfg.grid) throw ConfigError("a grid section is required for PDE solves");
    const Region region = kind == RiskKind::safety ? Region::safe_interior : Region::complement;
    return build_generator(cfg.system(), *cfg.grid, cfg.safe_set(), region, cfg.generator_options());
}

RiskField solve_config(const RunConfig& cfg, RiskKind kind) {
    const auto gen = config_generator(cfg, kind);
    const auto times = cfg.time_grid();
    return kind == RiskKind::safety ? solve_safety(gen, cfg.subordinator(), times, cfg.solver)
                                    : solve_recovery(gen, cfg.subordinator(), times, cfg.solver);
}

McTable mc_config_table(const RunConfig& cfg, RiskKind kind, std::size_t workers) {
    if (cfg.mc_points.empty()) throw ConfigError("mc.points is required for Monte Carlo runs");
    if (cfg.horizons.empty()) throw ConfigError("time.horizons is required for Monte Carlo runs");
    return mc_grid(cfg.system(), cfg.safe_set(), cfg.mc_points, cfg.horizons, cfg.mc_paths, kind,
                   cfg.mc_config(workers), component_stream(cfg.seed, "risk_mc"));
}

Comparison compare_field(const RiskField& field, const McTable& table, double tolerance, double ci_multiplier) {
    if (field.kind != table.kind) throw DomainError("field and Monte Carlo table estimate different quantities");
    Comparison cmp;
    std::size_t within = 0;
    for (const auto& r : table.rows) {
        if (r.T > field.times.back() + 1e-12) throw DomainError("Monte Carlo horizon beyond the solved time range");
        ComparisonRow row;
        row.x = r.x;
        row.T = r.T;
        row.mc = r.estimate;
        row.pde = field.interpolate(r.x, r.T);
        row.diff = row.pde - r.estimate.p;
        const double ci_band = ci_multiplier * r.estimate.half_width();
        row.tol = std::max(tolerance, ci_band);
        row.within_ci = std::abs(row.diff) <= ci_band;
        row.ok = std::abs(row.diff) <= row.tol;
        cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::abs(row.diff));
        if (row.within_ci) ++within;
        if (!row.ok) ++cmp.failures;
        cmp.rows.push_back(std::move(row));
    }
    cmp.frac_within_ci = cmp.rows.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(cmp.rows.size());
    return cmp;
}

void write_comparison_csv(const Comparison& cmp, std::ostream& out) {
    const std::size_t dim = cmp.rows.empty() ? 1 : cmp.rows.front().x.size();
    out << (dim == 1 ? "x1" : "x1,x2") << ",T,mc,ci_low,ci_high,pde,diff,tol\n";
    out << std::setprecision(10);
    for (const auto& r : cmp.rows) {
        for (double v : r.x) out << v << ',';
        out << r.T << ',' << r.mc.p << ',' << r.mc.ci_low << ',' << r.mc.ci_high << ',' << r.pde << ',' << r.diff << ','
            << r.tol << '\n';
    }
}

double max_field_difference(const RiskField& a, const RiskField& b, double lower, double upper) {
    if (a.grid.size() != b.grid.size() || a.times != b.times) throw DomainError("fields are not on a common grid");
    double worst = 0.0;
    for (std::size_t c = 0; c < a.grid.size(); ++c) {
        const double x = a.grid.center(c)[0];
        if (a.grid.dim() == 1 && (x < lower || x >= upper)) continue;
        for (std::size_t t = 0; t < a.n_times(); ++t) worst = std::max(worst, std::abs(a.at(t, c) - b.at(t, c)));
    }
    return worst;
}

DatasetSpec dataset_setup_from_manifest(const nlohmann::json& manifest) {
    try {
        DatasetSpec spec;
        spec.grid = grid_from_json(manifest.at("grid"));
        spec.times = manifest.at("times").get<std::vector<double>>();
        const auto& st = manifest.at("stable");
        std::vector<SpectralAtom> atoms;
        for (const auto& a : st.at("atoms")) {
            atoms.push_back({a.at("direction").get<std::vector<double>>(), a.at("weight").get<double>()});
        }
        spec.stable = StableParams(st.at("alpha").get<double>(), std::move(atoms));
        spec.subordinator = SubordinatorParams(manifest.at("beta").get<double>());
        spec.sigma = manifest.at("sigma").get<double>();
        spec.safe = barrier_from_json(manifest.at("safe_set"));
        spec.far_field = far_field_from_string(manifest.at("far_field").get<std::string>());
        spec.seed = manifest.at("seed").get<std::uint64_t>();
        const auto& s = manifest.at("solver");
        spec.solver.startup_intervals = s.at("startup_intervals").get<std::size_t>();
        spec.solver.startup_points = s.at("startup_points").get<std::size_t>();
        spec.solver.iterative_tolerance = s.at("iterative_tolerance").get<double>();
        spec.solver.dense_limit = s.at("dense_limit").get<std::size_t>();
        spec.solver.direct_limit = s.at("direct_limit").get<std::size_t>();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("dataset manifest is incomplete: ") + e.what());
    }
}

OodReport ood_evaluate(const DatasetSpec& setup, const OodOptions& options) {
    if (setup.grid.dim() != 2) throw ConfigError("OOD evaluation needs a 2D dataset");
    if (setup.times.size() < 2) throw ConfigError("OOD evaluation needs at least one positive output time");
    std::vector<Axis> axes = setup.grid.axes();
    if (options.cells > 0) {
        for (auto& a : axes) a.cells = options.cells;
    }
    const Grid solve_grid(axes);
    const SystemSpec sys{2, drift_function(ood_drift()), [s = setup.sigma](std::span<const double>) { return s; },
                         setup.stable, setup.subordinator};
    const SafeSet safe = SafeSet::from_spec(setup.safe);
    GeneratorOptions gopt;
    gopt.far_field = setup.far_field;
    const auto gen = build_generator(sys, solve_grid, safe, Region::safe_interior, gopt);

    OodReport report;
    report.field = solve_safety(gen, setup.subordinator, setup.times, setup.solver);

    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < setup.grid.size(); ++c) {
        const auto ctr = setup.grid.center(c);
        if (safe.safe(std::span<const double>(ctr.data(), 2))) candidates.push_back(c);
    }
    if (candidates.empty()) throw ConfigError("dataset grid has no cell inside the safe set");

    RngStream pick(options.seed, stream_id_for("ood.points"));
    McConfig mc;
    mc.ds = options.mc_ds;
    mc.workers = options.workers;
    if (setup.far_field == FarField::clamp) mc.clamp_lower = {axes[0].lower, axes[1].lower};

    McTable table;
    table.kind = RiskKind::safety;
    const std::uint64_t mc_stream = stream_id_for("ood.mc");
    for (std::size_t k = 0; k < options.points; ++k) {
        const std::size_t cell = candidates[pick.next_u64() % candidates.size()];
        const std::size_t ti = 1 + static_cast<std::size_t>(pick.next_u64() % (setup.times.size() - 1));
        const auto ctr = setup.grid.center(cell);
        const std::vector<double> x{ctr[0], ctr[1]};
        const auto one = mc_grid(sys, safe, {x}, {setup.times[ti]}, options.n_paths, RiskKind::safety, mc,
                                 RngStream(options.seed, mix_stream(mc_stream, k)));
        table.rows.push_back(one.rows.front());
        table.capped_pairs += one.capped_pairs;
        table.non_finite_paths += one.non_finite_paths;
        table.operational_cap = std::max(table.operational_cap, one.operational_cap);
    }
    report.checks = compare_field(report.field, table, options.tolerance, options.ci_multiplier);
    return report;
}

}  // namespace fracrisk
