#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fracrisk/rng.hpp"
#include "fracrisk/stable.hpp"

namespace fracrisk {

class GeneratorMatrix;

using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
using ScalarFn = std::function<double(std::span<const double> x)>;

/// dX = f(X) ds + sigma(X) dL with L alpha-stable, observed through the
/// inverse subordinator E_t.
///
/// sigma is scalar. The increment over ds is drawn with characteristic
/// exponent sigma(X)^alpha ds psi, so the generator is exactly
/// f . grad + sigma^alpha J_alpha (including alpha = 1 with skew).
struct SystemSpec {
    int dim = 1;
    DriftFn drift;
    ScalarFn noise_scale;
    StableParams stable;
    SubordinatorParams subordinator;

    static SystemSpec constant(std::vector<double> drift, double sigma, StableParams stable,
                               SubordinatorParams subordinator);
};

/// Serializable description of the barrier function phi.
struct BarrierSpec {
    enum class Kind {
        half_line_above,  // phi(x) = x - bound[0]          (safe: x > bound)
        half_line_below,  // phi(x) = bound[0] - x          (safe: x < bound)
        box_below,        // phi(x) = min_k (bound[k] - x_k) (safe: every x_k < bound[k])
    };
    Kind kind = Kind::half_line_above;
    std::vector<double> bound;
};

/// C = {phi >= 0}. A state counts as safe iff phi(x) > 0; the boundary is unsafe.
struct SafeSet {
    ScalarFn barrier;
    DriftFn gradient;  // optional; central differences when empty

    bool safe(std::span<const double> x) const { return barrier(x) > 0.0; }

    static SafeSet from_spec(const BarrierSpec& spec);
};

struct ExitRecord {
    bool exited = false;
    double exit_op_time = 0.0;  // valid iff exited
    double capped_at = 0.0;
    bool non_finite = false;
};

enum class Passage { exit, recovery };

struct EulerOptions {
    double ds = 1e-3;
    /// For alpha = 2 only: count a crossing between grid times with the
    /// Brownian-bridge probability exp(-2 d0 d1 / (v ds)).
    bool gaussian_bridge = true;
    /// Optional per-coordinate projection of the state after every step.
    std::vector<double> clamp_lower;
    std::vector<double> clamp_upper;
};

/// Euler-Maruyama until the first grid time where the state leaves the safe
/// set (Passage::exit) or enters it (Passage::recovery), or until s_max.
ExitRecord first_passage_euler(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0,
                               double s_max, Passage passage, RngStream& rng,
                               const EulerOptions& options = {});

ExitRecord first_exit_time_euler(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0,
                                 double s_max, double ds, RngStream& rng);
ExitRecord first_recovery_time_euler(const SystemSpec& sys, const SafeSet& safe,
                                     std::span<const double> x0, double s_max, double ds, RngStream& rng);

/// Event-driven simulation of the finite-state chain defined by a generator
/// matrix. Absorption into the exterior ends a path.
class CtmcSimulator {
public:
    explicit CtmcSimulator(const GeneratorMatrix& gen);

    /// `cell` is a grid cell index; it must belong to the generator's region.
    ExitRecord exit_time(std::size_t cell, double s_max, RngStream& rng) const;

private:
    std::vector<std::ptrdiff_t> unknown_of_cell_;
    std::vector<std::size_t> row_start_;
    std::vector<std::size_t> dest_;       // unknown index, or npos for absorption
    std::vector<double> cumulative_;      // running rate sums per row
    std::vector<double> total_rate_;
};

ExitRecord gillespie_exit_time(const CtmcSimulator& chain, std::size_t cell0, double s_max, RngStream& rng);

}  // namespace fracrisk
