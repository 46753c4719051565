#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracrisk/dataset.hpp"
#include "fracrisk/generator.hpp"
#include "fracrisk/risk_mc.hpp"
#include "fracrisk/sde.hpp"
#include "fracrisk/solver.hpp"
#include "fracrisk/stable.hpp"

namespace fracrisk {

struct DriftSpec {
    enum class Kind { constant, family, ood };
    Kind kind = Kind::constant;
    std::vector<double> value;  // constant drift
    DriftCoeffs coeffs;         // family member
    std::string label;
};

/// Validated run configuration. Sections: system, safe_set, kind, grid,
/// time, mc, solver, compare, dataset, ood, output. Unknown keys are rejected.
struct RunConfig {
    int dim = 1;
    double alpha = 2.0;
    double beta = 1.0;
    std::vector<SpectralAtom> atoms;
    double sigma = 1.0;
    DriftSpec drift;
    BarrierSpec safe;
    RiskKind kind = RiskKind::safety;

    std::optional<Grid> grid;
    FarField far_field = FarField::absorb;

    std::vector<double> horizons;

    std::size_t mc_paths = 100000;
    double mc_ds = 1e-3;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> mc_points;
    ClockMode clock = ClockMode::independent;
    bool gaussian_bridge = true;
    std::vector<double> mc_clamp_lower;  // projection after every Euler step

    double solver_dt = 1e-3;
    std::optional<double> solver_t_max;
    SolverOptions solver;

    double compare_tolerance = 0.02;
    double compare_ci_multiplier = 3.0;

    std::size_t dataset_samples = 20;
    FamilyParams family;
    double train_fraction = 0.8;

    std::size_t ood_points = 10;
    std::size_t ood_paths = 10000;
    double ood_tolerance = 0.03;
    std::optional<std::size_t> ood_cells;

    std::string out_csv;
    std::string out_pde_csv;
    std::string out_frsk;

    nlohmann::json raw;

    StableParams stable() const;
    SubordinatorParams subordinator() const { return SubordinatorParams(beta); }
    SystemSpec system() const;
    SafeSet safe_set() const { return SafeSet::from_spec(safe); }
    /// Output times for PDE solves: uniform from 0 to t_max (default: last horizon).
    std::vector<double> time_grid() const;
    McConfig mc_config(std::size_t workers) const;
    GeneratorOptions generator_options() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Dataset parameters taken from a config document.
DatasetSpec dataset_spec(const RunConfig& cfg, std::size_t workers);

/// Stream id derived from a component name and the config seed.
RngStream component_stream(std::uint64_t seed, const char* component);

}  // namespace fracrisk
