#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracrisk/generator.hpp"
#include "fracrisk/grid.hpp"
#include "fracrisk/stable.hpp"

namespace fracrisk {

/// L1 weights on a uniform mesh: b_k = (k+1)^{1-beta} - k^{1-beta} and the
/// scale 1 / (Gamma(2 - beta) dt^beta).
struct CaputoWeights {
    double beta = 1.0;
    double scale = 1.0;
    std::vector<double> b;
};

CaputoWeights caputo_weights(double beta, std::size_t n_steps, double dt);

/// {0, dt, ..., t_max} with dt adjusted so that t_max is hit exactly.
std::vector<double> uniform_time_grid(double t_max, double dt);

enum class RiskKind { safety, recovery };

const char* to_string(RiskKind kind) noexcept;

struct SolverOptions {
    /// For beta < 1 the first `startup_intervals` uniform steps are replaced by
    /// a graded mesh with `startup_points` points clustered at t = 0. Zero
    /// gives the plain uniform L1 scheme.
    std::size_t startup_intervals = 4;
    std::size_t startup_points = 60;
    double iterative_tolerance = 1e-10;
    std::size_t dense_limit = 2500;
    std::size_t direct_limit = 20000;
};

/// Probability values on grid cells x output times.
struct RiskField {
    Grid grid;
    RiskKind kind = RiskKind::safety;
    std::vector<double> times;
    std::vector<double> values;  // [time][cell]
    std::vector<char> in_region;
    double exterior_value = 0.0;
    nlohmann::json provenance = nlohmann::json::object();

    std::size_t n_times() const noexcept { return times.size(); }
    double at(std::size_t time_index, std::size_t cell) const { return values[time_index * grid.size() + cell]; }
    /// Multilinear in space (between cell centres, clamped at the grid edge)
    /// and linear in time.
    double interpolate(std::span<const double> x, double t) const;
};

struct FieldStats {
    double min_value = 0.0;
    double max_value = 0.0;
    double worst_monotonicity = 0.0;  // largest step against the expected direction
    std::size_t bound_violations = 0;
    std::size_t monotonicity_violations = 0;
    bool ok() const noexcept { return bound_violations == 0 && monotonicity_violations == 0; }
};

FieldStats field_stats(const RiskField& field);
/// Throws InvariantViolation unless values lie in [-1e-9, 1 + 1e-9] and
/// are monotone in time (within 1e-8) in the kind's direction.
void validate_field(const RiskField& field);

RiskField solve_safety(const GeneratorMatrix& gen, const SubordinatorParams& sub, const std::vector<double>& t_grid,
                       const SolverOptions& options = {});
/// `gen` must be built on the complement region; returns 1 - F_complement.
RiskField solve_recovery(const GeneratorMatrix& gen, const SubordinatorParams& sub,
                         const std::vector<double>& t_grid, const SolverOptions& options = {});

/// Columns x1[,x2],T,value for every grid cell and output time.
void write_field_csv(const RiskField& field, std::ostream& out);

}  // namespace fracrisk
