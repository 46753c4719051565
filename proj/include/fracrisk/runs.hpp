#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "fracrisk/config.hpp"
#include "fracrisk/generator.hpp"
#include "fracrisk/risk_mc.hpp"
#include "fracrisk/solver.hpp"

namespace fracrisk {

/// Generator on the region matching `kind` (safe interior for safety,
/// complement for recovery). Needs a grid section.
GeneratorMatrix config_generator(const RunConfig& cfg, RiskKind kind);
RiskField solve_config(const RunConfig& cfg, RiskKind kind);

/// MC table over cfg.mc_points x cfg.horizons, stream "risk_mc" of cfg.seed.
McTable mc_config_table(const RunConfig& cfg, RiskKind kind, std::size_t workers);

struct ComparisonRow {
    std::vector<double> x;
    double T = 0.0;
    Estimate mc;
    double pde = 0.0;
    double diff = 0.0;  // pde - mc
    double tol = 0.0;   // max(tolerance, ci_multiplier * half width)
    bool within_ci = false;
    bool ok = false;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    double max_abs_diff = 0.0;
    double frac_within_ci = 0.0;
    std::size_t failures = 0;
    bool passed() const noexcept { return failures == 0; }
};

Comparison compare_field(const RiskField& field, const McTable& table, double tolerance, double ci_multiplier);

/// Columns x1[,x2],T,mc,ci_low,ci_high,pde,diff,tol.
void write_comparison_csv(const Comparison& cmp, std::ostream& out);

/// Largest |a - b| over cells whose centre lies in [lower, upper) (1D) and
/// over common output times. Both fields must share grid and times.
double max_field_difference(const RiskField& a, const RiskField& b, double lower, double upper);

struct OodOptions {
    std::size_t cells = 0;  // 0: dataset grid resolution
    std::size_t points = 10;
    std::size_t n_paths = 10000;
    double tolerance = 0.03;
    double ci_multiplier = 3.0;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    double mc_ds = 1e-3;
};

struct OodReport {
    RiskField field;
    Comparison checks;
};

/// Solves the fixed out-of-distribution system with the dataset's noise,
/// safe set and time grid, then spot-checks it against Monte Carlo at random
/// (cell centre of the dataset grid, output time > 0) pairs.
OodReport ood_evaluate(const DatasetSpec& setup, const OodOptions& options);

/// Dataset setup recovered from an FRSK1 manifest.
DatasetSpec dataset_setup_from_manifest(const nlohmann::json& manifest);

}  // namespace fracrisk
