#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fracrisk/rng.hpp"
#include "fracrisk/sde.hpp"
#include "fracrisk/solver.hpp"

namespace fracrisk {

/// Binomial proportion with a Wilson 95% interval.
struct Estimate {
    double p = 0.0;
    std::size_t n = 0;
    std::size_t successes = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    /// Fraction of paths whose operational horizon exceeded the simulation cap.
    double bias_bound = 0.0;

    double half_width() const noexcept;
};

inline constexpr double kWilsonZ95 = 1.959963984540054;

Estimate wilson_estimate(std::size_t successes, std::size_t n, double z = kWilsonZ95);

enum class ClockMode {
    independent,  // E_T drawn per (path, horizon) as (T / D_1)^beta
    path,         // one subordinator path per base path, inverted at every horizon
};

struct McConfig {
    double ds = 1e-3;
    std::size_t workers = 1;  // 0: hardware concurrency
    bool gaussian_bridge = true;
    double cap_quantile = 0.999;
    std::size_t cap_samples = 10000;
    ClockMode clock = ClockMode::independent;
    double path_du = 1e-3;
    std::vector<double> clamp_lower;
    std::vector<double> clamp_upper;
};

struct McRow {
    std::vector<double> x;
    double T = 0.0;
    Estimate estimate;
};

struct McTable {
    RiskKind kind = RiskKind::safety;
    std::vector<McRow> rows;  // x-major, horizons ascending within each x
    double operational_cap = 0.0;
    std::size_t capped_pairs = 0;
    std::size_t non_finite_paths = 0;
};

Estimate mc_safety(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0, double T,
                   std::size_t n_paths, const McConfig& cfg, const RngStream& rng);
Estimate mc_recovery(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0, double T,
                     std::size_t n_paths, const McConfig& cfg, const RngStream& rng);

/// One base path per (x, path index), scored against every horizon.
/// Path i of start state k uses rng.substream(k * n_paths + i), so the table
/// does not depend on cfg.workers.
McTable mc_grid(const SystemSpec& sys, const SafeSet& safe, const std::vector<std::vector<double>>& xs,
                const std::vector<double>& horizons, std::size_t n_paths, RiskKind kind, const McConfig& cfg,
                const RngStream& rng);

/// Same estimator with the base process replaced by the CTMC of `gen`.
/// Safety counts survival (no absorption); recovery counts absorption, so
/// the generator must live on the complement region for recovery.
McTable mc_grid_ctmc(const GeneratorMatrix& gen, const SubordinatorParams& sub, const std::vector<std::size_t>& cells,
                     const std::vector<double>& horizons, std::size_t n_paths, RiskKind kind, const McConfig& cfg,
                     const RngStream& rng);

/// Operational-time cap: cfg.cap_quantile quantile of E_T at the largest horizon.
double operational_cap(const SubordinatorParams& sub, double horizon, const McConfig& cfg, const RngStream& rng);

/// Columns x1[,x2],T,p,ci_low,ci_high,n_paths,bias_bound.
void write_mc_csv(const McTable& table, std::ostream& out);

}  // namespace fracrisk
