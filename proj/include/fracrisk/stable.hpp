#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fracrisk/rng.hpp"

namespace fracrisk {

/// One atom of a discrete spectral measure: a unit direction and its mass.
struct SpectralAtom {
    std::vector<double> direction;
    double weight = 0.0;
};

/// Alpha-stable noise: stability index and an atomic spectral measure.
///
/// The characteristic exponent is
///   psi(xi) = sum_i w_i |xi.theta_i|^alpha (1 - i tan(pi alpha / 2) sign(xi.theta_i))
/// for alpha != 1 and the logarithmic form for alpha = 1; the driving Levy
/// process satisfies E exp(i xi . L_t) = exp(-t psi(xi)).
class StableParams {
public:
    StableParams(double alpha, std::vector<SpectralAtom> atoms);

    /// 1D measure with atoms {+1, -1}.
    static StableParams one_dimensional(double alpha, double weight_plus, double weight_minus);
    /// Atoms on +-e_k for every axis with equal weight total_mass / (2 dim).
    static StableParams symmetric_axes(double alpha, int dim, double total_mass = 1.0);

    double alpha() const noexcept { return alpha_; }
    int dim() const noexcept { return dim_; }
    const std::vector<SpectralAtom>& atoms() const noexcept { return atoms_; }
    double total_mass() const noexcept;
    bool is_symmetric() const;

    /// Sum of atom weights whose direction equals +e_axis (sign > 0) or -e_axis.
    /// Throws DomainError if some atom is not axis aligned.
    double axis_weight(int axis, int sign) const;
    bool axis_aligned() const;

    /// 1D only: (w+ - w-) / (w+ + w-).
    double skew() const;

private:
    double alpha_;
    int dim_;
    std::vector<SpectralAtom> atoms_;
};

/// Memory index of the beta-stable subordinator; beta = 1 means no time change.
class SubordinatorParams {
public:
    explicit SubordinatorParams(double beta);
    double beta() const noexcept { return beta_; }
    bool memoryless() const noexcept { return beta_ == 1.0; }

private:
    double beta_;
};

/// Chambers-Mallows-Stuck draw with characteristic function
/// exp(-|xi|^alpha (1 - i skew tan(pi alpha/2) sign xi)) (alpha != 1) or
/// exp(-|xi| (1 + i skew (2/pi) sign(xi) log|xi|)) (alpha = 1).
/// For alpha = 2 the draw is sqrt(2) * N(0, 1).
double sample_standard_stable(double alpha, double skew, RngStream& rng);

/// D_{u+du} - D_u for the subordinator with E exp(-s D_u) = exp(-u s^beta).
double sample_subordinator_increment(double beta, double du, RngStream& rng);

/// E_T drawn through E_T = (T / D_1)^beta.
double sample_inverse_subordinator(double beta, double horizon, RngStream& rng);

/// Subordinator sampled on the uniform grid u_k = k du.
struct SubordinatorPath {
    double du = 0.0;
    std::vector<double> values;  // values[k] = D(k du), values[0] = 0
    double u_max() const noexcept { return du * static_cast<double>(values.size() - 1); }
};

SubordinatorPath sample_subordinator_path(double beta, double u_max, double du, RngStream& rng);

/// First grid passage of D above t, linearly interpolated inside the crossing
/// cell. Throws HorizonExhausted when t >= D(u_max).
double invert_path(const SubordinatorPath& path, double t);

std::complex<double> characteristic_exponent(const StableParams& params, std::span<const double> xi);
std::complex<double> characteristic_exponent(const StableParams& params, double xi);

/// Adds one increment of the driving process over an interval whose
/// characteristic exponent is time_scale * psi (time_scale = sigma^alpha ds).
/// `out` must have params.dim() entries; the increment is added to it.
void add_levy_increment(const StableParams& params, double time_scale, RngStream& rng,
                        std::span<double> out);

/// Ratio c/w between the Levy density coefficient of a one-sided power law
/// c y^{-1-alpha} and the spectral weight it reproduces in psi.
double jump_intensity(double alpha);

enum class Side { positive, negative };

/// nu(dy)/dy for the 1D measure: c+ y^{-1-alpha} (y > 0), c- |y|^{-1-alpha} (y < 0).
double levy_density_1d(const StableParams& params, double y);

/// nu((a, inf)) on the positive side or nu((-inf, -a)) on the negative side.
double tail_mass_1d(const StableParams& params, double a, Side side);

}  // namespace fracrisk
