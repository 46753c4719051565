#include "fracrisk/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracrisk/errors.hpp"

namespace fracrisk {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw DomainError("stability index must lie in (0, 2], got " + std::to_string(alpha));
    }
}

void check_subordinator_beta(double beta) {
    if (beta == 1.0) {
        throw DomainError("beta = 1 has no subordinator; use E_t = t directly");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw DomainError("subordinator index must lie in (0, 1), got " + std::to_string(beta));
    }
}

// Positive beta-stable variable with Laplace transform exp(-s^beta).
double sample_unit_subordinator(double beta, RngStream& rng) {
    const double scale = std::pow(std::cos(kPi * beta / 2.0), 1.0 / beta);
    return scale * sample_standard_stable(beta, 1.0, rng);
}

}  // namespace

StableParams::StableParams(double alpha, std::vector<SpectralAtom> atoms)
    : alpha_(alpha), dim_(0), atoms_(std::move(atoms)) {
    check_alpha(alpha);
    if (atoms_.empty()) throw DomainError("spectral measure needs at least one atom");
    dim_ = static_cast<int>(atoms_.front().direction.size());
    if (dim_ < 1) throw DomainError("spectral atom direction is empty");
    bool any_positive = false;
    for (const auto& atom : atoms_) {
        if (static_cast<int>(atom.direction.size()) != dim_) {
            throw DomainError("spectral atoms have inconsistent dimensions");
        }
        if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) {
            throw DomainError("spectral weights must be finite and nonnegative");
        }
        double norm2 = 0.0;
        for (double c : atom.direction) norm2 += c * c;
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) {
            throw DomainError("spectral atom directions must be unit vectors");
        }
        any_positive = any_positive || atom.weight > 0.0;
    }
    if (!any_positive) throw DomainError("spectral measure has zero total mass");
}

StableParams StableParams::one_dimensional(double alpha, double weight_plus, double weight_minus) {
    return StableParams(alpha, {{{1.0}, weight_plus}, {{-1.0}, weight_minus}});
}

StableParams StableParams::symmetric_axes(double alpha, int dim, double total_mass) {
    if (dim < 1) throw DomainError("dimension must be positive");
    std::vector<SpectralAtom> atoms;
    const double w = total_mass / (2.0 * dim);
    for (int k = 0; k < dim; ++k) {
        for (double sign : {1.0, -1.0}) {
            SpectralAtom atom{std::vector<double>(static_cast<std::size_t>(dim), 0.0), w};
            atom.direction[static_cast<std::size_t>(k)] = sign;
            atoms.push_back(std::move(atom));
        }
    }
    return StableParams(alpha, std::move(atoms));
}

double StableParams::total_mass() const noexcept {
    double total = 0.0;
    for (const auto& atom : atoms_) total += atom.weight;
    return total;
}

bool StableParams::is_symmetric() const {
    // Lambda(A) = Lambda(-A): the mass on each direction equals the mass on its negation.
    auto mass_on = [&](const std::vector<double>& dir) {
        double m = 0.0;
        for (const auto& atom : atoms_) {
            double d2 = 0.0;
            for (int k = 0; k < dim_; ++k) {
                const double diff = atom.direction[static_cast<std::size_t>(k)] - dir[static_cast<std::size_t>(k)];
                d2 += diff * diff;
            }
            if (d2 < 1e-20) m += atom.weight;
        }
        return m;
    };
    for (const auto& atom : atoms_) {
        std::vector<double> neg(atom.direction);
        for (double& c : neg) c = -c;
        if (std::abs(mass_on(atom.direction) - mass_on(neg)) > 1e-14 * total_mass()) return false;
    }
    return true;
}

bool StableParams::axis_aligned() const {
    for (const auto& atom : atoms_) {
        if (atom.weight == 0.0) continue;
        int nonzero = 0;
        for (double c : atom.direction) {
            if (std::abs(c) > 1e-12) ++nonzero;
        }
        if (nonzero != 1) return false;
    }
    return true;
}

double StableParams::axis_weight(int axis, int sign) const {
    if (!axis_aligned()) throw DomainError("spectral measure is not axis aligned");
    double total = 0.0;
    for (const auto& atom : atoms_) {
        const double c = atom.direction[static_cast<std::size_t>(axis)];
        if (std::abs(std::abs(c) - 1.0) <= 1e-12 && c * sign > 0.0) total += atom.weight;
    }
    return total;
}

double StableParams::skew() const {
    if (dim_ != 1) throw DomainError("skew is defined for 1D measures only");
    const double wp = axis_weight(0, 1);
    const double wm = axis_weight(0, -1);
    return (wp - wm) / (wp + wm);
}

SubordinatorParams::SubordinatorParams(double beta) : beta_(beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw DomainError("memory index must lie in (0, 1], got " + std::to_string(beta));
    }
}

double sample_standard_stable(double alpha, double skew, RngStream& rng) {
    check_alpha(alpha);
    if (!(std::abs(skew) <= 1.0)) throw DomainError("skew must lie in [-1, 1]");
    if (alpha == 2.0) return std::numbers::sqrt2 * rng.normal();

    const double v = kPi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    if (alpha == 1.0) {
        const double half_pi = kPi / 2.0;
        const double shifted = half_pi + skew * v;
        return (2.0 / kPi) * (shifted * std::tan(v) - skew * std::log(half_pi * w * std::cos(v) / shifted));
    }
    const double zeta = skew * std::tan(kPi * alpha / 2.0);
    const double b = std::atan(zeta) / alpha;
    const double s = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * alpha));
    const double arg = alpha * (v + b);
    return s * std::sin(arg) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - arg) / w, (1.0 - alpha) / alpha);
}

double sample_subordinator_increment(double beta, double du, RngStream& rng) {
    check_subordinator_beta(beta);
    if (!(du > 0.0)) throw DomainError("subordinator increment needs du > 0");
    return std::pow(du, 1.0 / beta) * sample_unit_subordinator(beta, rng);
}

double sample_inverse_subordinator(double beta, double horizon, RngStream& rng) {
    check_subordinator_beta(beta);
    if (!(horizon >= 0.0)) throw DomainError("horizon must be nonnegative");
    if (horizon == 0.0) return 0.0;
    return std::pow(horizon / sample_unit_subordinator(beta, rng), beta);
}

SubordinatorPath sample_subordinator_path(double beta, double u_max, double du, RngStream& rng) {
    check_subordinator_beta(beta);
    if (!(du > 0.0) || !(u_max > 0.0)) throw DomainError("subordinator path needs du > 0 and u_max > 0");
    const auto steps = static_cast<std::size_t>(std::ceil(u_max / du - 1e-12));
    SubordinatorPath path{du, {}};
    path.values.reserve(steps + 1);
    path.values.push_back(0.0);
    const double scale = std::pow(du, 1.0 / beta);
    double d = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        d += scale * sample_unit_subordinator(beta, rng);
        path.values.push_back(d);
    }
    return path;
}

double invert_path(const SubordinatorPath& path, double t) {
    if (!(t >= 0.0)) throw DomainError("inverse subordinator needs t >= 0");
    const auto& d = path.values;
    const auto it = std::upper_bound(d.begin(), d.end(), t);
    if (it == d.end()) {
        throw HorizonExhausted("subordinator path ends at D = " + std::to_string(d.back()) +
                               " <= t = " + std::to_string(t) + "; extend u_max");
    }
    const auto k = static_cast<std::size_t>(it - d.begin());  // k >= 1 since d[0] = 0 <= t
    const double lo = d[k - 1];
    const double hi = d[k];
    return path.du * (static_cast<double>(k - 1) + (t - lo) / (hi - lo));
}

std::complex<double> characteristic_exponent(const StableParams& params, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != params.dim()) throw DomainError("xi has the wrong dimension");
    const double alpha = params.alpha();
    std::complex<double> psi{0.0, 0.0};
    for (const auto& atom : params.atoms()) {
        double proj = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) proj += xi[k] * atom.direction[k];
        if (proj == 0.0 || atom.weight == 0.0) continue;
        const double a = std::abs(proj);
        const double sign = proj > 0.0 ? 1.0 : -1.0;
        if (alpha == 1.0) {
            psi += atom.weight * a * std::complex<double>(1.0, (2.0 / kPi) * sign * std::log(a));
        } else if (alpha == 2.0) {
            psi += atom.weight * a * a;
        } else {
            psi += atom.weight * std::pow(a, alpha) *
                   std::complex<double>(1.0, -std::tan(kPi * alpha / 2.0) * sign);
        }
    }
    return psi;
}

std::complex<double> characteristic_exponent(const StableParams& params, double xi) {
    const double v[1] = {xi};
    return characteristic_exponent(params, std::span<const double>(v, 1));
}

void add_levy_increment(const StableParams& params, double time_scale, RngStream& rng,
                        std::span<double> out) {
    if (time_scale <= 0.0) return;
    const double alpha = params.alpha();
    if (params.dim() == 1) {
        const double mass = params.total_mass();
        if (alpha == 2.0) {
            out[0] += std::sqrt(2.0 * time_scale * mass) * rng.normal();
            return;
        }
        const double skew = params.skew();
        const double scale = std::pow(time_scale * mass, 1.0 / alpha);
        double jump = scale * sample_standard_stable(alpha, skew, rng);
        if (alpha == 1.0) jump += (2.0 / kPi) * skew * scale * std::log(scale);
        out[0] += jump;
        return;
    }
    for (const auto& atom : params.atoms()) {
        if (atom.weight == 0.0) continue;
        double jump;
        if (alpha == 2.0) {
            jump = std::sqrt(2.0 * time_scale * atom.weight) * rng.normal();
        } else {
            const double scale = std::pow(time_scale * atom.weight, 1.0 / alpha);
            jump = scale * sample_standard_stable(alpha, 1.0, rng);
            if (alpha == 1.0) jump += (2.0 / kPi) * scale * std::log(scale);
        }
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += jump * atom.direction[k];
    }
}

double jump_intensity(double alpha) {
    check_alpha(alpha);
    if (alpha == 2.0) throw DomainError("alpha = 2 has no jump measure");
    if (alpha == 1.0) return 2.0 / kPi;
    return -1.0 / (std::tgamma(-alpha) * std::cos(kPi * alpha / 2.0));
}

double levy_density_1d(const StableParams& params, double y) {
    if (y == 0.0) throw DomainError("Levy density is singular at y = 0");
    const double w = y > 0.0 ? params.axis_weight(0, 1) : params.axis_weight(0, -1);
    return jump_intensity(params.alpha()) * w * std::pow(std::abs(y), -1.0 - params.alpha());
}

double tail_mass_1d(const StableParams& params, double a, Side side) {
    if (!(a > 0.0)) throw DomainError("tail mass needs a > 0");
    const double w = side == Side::positive ? params.axis_weight(0, 1) : params.axis_weight(0, -1);
    const double alpha = params.alpha();
    return jump_intensity(alpha) * w / alpha * std::pow(a, -alpha);
}

}  // namespace fracrisk
