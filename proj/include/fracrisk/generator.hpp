#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "fracrisk/grid.hpp"
#include "fracrisk/sde.hpp"
#include "fracrisk/stable.hpp"

namespace fracrisk {

/// Which open set the unknowns live on.
enum class Region {
    safe_interior,  // {phi > 0}; safety problem
    complement,     // {phi < 0}; safety-of-complement, i.e. recovery
};

/// Treatment of probability mass that leaves the grid into a part of the
/// state space that still belongs to the region.
enum class FarField {
    absorb,  // counted as exterior, like the complement of the region
    clamp,   // redirected to the grid's edge cell on that side
};

struct GeneratorOptions {
    FarField far_field = FarField::absorb;
    /// Wrap every rate around a 1D torus; no absorption. Used by symbol_check.
    bool periodic = false;
};

/// Sub-Markovian rate matrix of the discretized generator on the region's
/// cells. Off-diagonals are nonnegative and every row sums to -absorption[i].
class GeneratorMatrix {
public:
    using Rates = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    GeneratorMatrix(Grid grid, Region region, StableParams stable, bool periodic, Rates rates,
                    Eigen::VectorXd absorption, std::vector<std::ptrdiff_t> unknown_of_cell,
                    std::vector<std::size_t> cell_of_unknown, std::vector<double> sigma_samples,
                    std::vector<double> drift_samples);

    const Grid& grid() const noexcept { return grid_; }
    Region region() const noexcept { return region_; }
    const StableParams& stable() const noexcept { return stable_; }
    bool periodic() const noexcept { return periodic_; }
    const Rates& rates() const noexcept { return rates_; }
    const Eigen::VectorXd& absorption() const noexcept { return absorption_; }
    std::size_t size() const noexcept { return cell_of_unknown_.size(); }

    /// -1 for grid cells outside the region.
    const std::vector<std::ptrdiff_t>& unknown_of_cell() const noexcept { return unknown_of_cell_; }
    const std::vector<std::size_t>& cell_of_unknown() const noexcept { return cell_of_unknown_; }
    /// sigma(x_i) per unknown, and f(x_i) flattened as [unknown][dim].
    const std::vector<double>& sigma_samples() const noexcept { return sigma_samples_; }
    const std::vector<double>& drift_samples() const noexcept { return drift_samples_; }

private:
    Grid grid_;
    Region region_;
    StableParams stable_;
    bool periodic_;
    Rates rates_;
    Eigen::VectorXd absorption_;
    std::vector<std::ptrdiff_t> unknown_of_cell_;
    std::vector<std::size_t> cell_of_unknown_;
    std::vector<double> sigma_samples_;
    std::vector<double> drift_samples_;
};

/// Builds the CTMC discretization of f . grad + sigma^alpha J_alpha:
///  - jumps to cell j at rate sigma^alpha nu(cell_j - x_i), from exact
///    integrals of the power-law density along each atom axis;
///  - sub-cell jumps (|y| < h/2) replaced by a nearest-neighbour diffusion
///    with matched second moment, plus the drift that makes the operator's
///    Fourier symbol equal -psi (compensation / centring);
///  - drift centrally differenced through the neighbour rates where they
///    are large enough to keep every rate nonnegative, upwinded beyond that;
///  - alpha = 2: central second difference with coefficient sigma^2 * mass.
/// Mass landing outside the region goes to the absorption vector.
/// In 2D the spectral atoms must be axis aligned.
GeneratorMatrix build_generator(const SystemSpec& sys, const Grid& grid, const SafeSet& safe, Region region,
                                const GeneratorOptions& options = {});

/// Rayleigh quotient of the generator on the plane wave exp(i xi . x);
/// compare with i xi . f - sigma^alpha psi(xi) for a periodic,
/// constant-coefficient generator.
std::complex<double> symbol_check(const GeneratorMatrix& gen, std::span<const double> xi);
std::complex<double> symbol_check(const GeneratorMatrix& gen, double xi);

}  // namespace fracrisk
