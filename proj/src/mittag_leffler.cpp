#include "fracrisk/mittag_leffler.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fracrisk/errors.hpp"

namespace fracrisk {

namespace {

double power_series(double beta, double z) {
    double sum = 0.0;
    double zk = 1.0;
    for (int k = 0; k < 200; ++k) {
        const double term = zk / std::tgamma(beta * k + 1.0);
        sum += term;
        if (k > 4 && std::abs(term) < 1e-17 * std::abs(sum)) break;
        zk *= z;
    }
    return sum;
}

// E_beta(-x) = sin(beta pi)/(beta pi) * int_0^inf exp(-(u x)^{1/beta}) / (u^2 + 2u cos(beta pi) + 1) du
double laplace_integral(double beta, double x) {
    using boost::math::quadrature::gauss_kronrod;
    const double theta = beta * std::numbers::pi;
    const double c = std::cos(theta);
    const double xb = std::pow(x, 1.0 / beta);
    auto integrand = [&](double u) {
        const double denom = u * u + 2.0 * u * c + 1.0;
        return std::exp(-std::pow(u, 1.0 / beta) * xb) / denom;
    };
    // The kernel peaks at u = -cos(theta) once beta > 1/2.
    const double peak = std::max(-c, 0.0);
    const double tol = 1e-11;
    double total = 0.0;
    if (peak > 0.0) total += gauss_kronrod<double, 61>::integrate(integrand, 0.0, peak, 12, tol);
    total += gauss_kronrod<double, 61>::integrate(integrand, peak, peak + 1.0, 12, tol);
    total += gauss_kronrod<double, 61>::integrate(integrand, peak + 1.0, std::numeric_limits<double>::infinity(), 12, tol);
    return std::sin(theta) / theta * total;
}

}  // namespace

double mittag_leffler(double beta, double z) {
    if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("mittag_leffler: beta must lie in (0, 1]");
    if (!(z <= 0.0)) throw DomainError("mittag_leffler: only z <= 0 is supported");
    if (z == 0.0) return 1.0;
    if (beta == 1.0) return std::exp(z);
    if (z >= -1.0) return power_series(beta, z);
    return laplace_integral(beta, -z);
}

}  // namespace fracrisk
