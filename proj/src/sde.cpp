#include "fracrisk/sde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fracrisk/errors.hpp"
#include "fracrisk/generator.hpp"

namespace fracrisk {

namespace {

constexpr std::size_t kAbsorb = std::numeric_limits<std::size_t>::max();

void barrier_gradient(const SafeSet& safe, std::span<const double> x, std::span<double> g) {
    if (safe.gradient) {
        safe.gradient(x, g);
        return;
    }
    std::array<double, 2> probe{};
    std::copy(x.begin(), x.end(), probe.begin());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double eps = 1e-6 * std::max(1.0, std::abs(x[k]));
        probe[k] = x[k] + eps;
        const double up = safe.barrier(std::span<const double>(probe.data(), x.size()));
        probe[k] = x[k] - eps;
        const double down = safe.barrier(std::span<const double>(probe.data(), x.size()));
        probe[k] = x[k];
        g[k] = (up - down) / (2.0 * eps);
    }
}

// Signed distance proxy phi / |grad phi| and the unit normal.
double distance_and_normal(const SafeSet& safe, std::span<const double> x, double phi, std::span<double> normal) {
    barrier_gradient(safe, x, normal);
    double norm = 0.0;
    for (double c : normal) norm += c * c;
    norm = std::sqrt(norm);
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    for (double& c : normal) c /= norm;
    return phi / norm;
}

bool reached(double phi, Passage passage) { return passage == Passage::exit ? phi <= 0.0 : phi >= 0.0; }

}  // namespace

SystemSpec SystemSpec::constant(std::vector<double> drift, double sigma, StableParams stable,
                                SubordinatorParams subordinator) {
    if (static_cast<int>(drift.size()) != stable.dim()) throw DomainError("drift and noise dimensions differ");
    if (!(sigma >= 0.0)) throw DomainError("noise scale must be nonnegative");
    const int dim = stable.dim();
    return SystemSpec{
        dim,
        [drift](std::span<const double>, std::span<double> out) { std::copy(drift.begin(), drift.end(), out.begin()); },
        [sigma](std::span<const double>) { return sigma; },
        std::move(stable),
        subordinator,
    };
}

SafeSet SafeSet::from_spec(const BarrierSpec& spec) {
    switch (spec.kind) {
        case BarrierSpec::Kind::half_line_above: {
            if (spec.bound.size() != 1) throw DomainError("half-line barrier needs one bound");
            const double c = spec.bound[0];
            return SafeSet{[c](std::span<const double> x) { return x[0] - c; },
                           [](std::span<const double>, std::span<double> g) { g[0] = 1.0; }};
        }
        case BarrierSpec::Kind::half_line_below: {
            if (spec.bound.size() != 1) throw DomainError("half-line barrier needs one bound");
            const double c = spec.bound[0];
            return SafeSet{[c](std::span<const double> x) { return c - x[0]; },
                           [](std::span<const double>, std::span<double> g) { g[0] = -1.0; }};
        }
        case BarrierSpec::Kind::box_below: {
            if (spec.bound.empty()) throw DomainError("box barrier needs bounds");
            const auto upper = spec.bound;
            auto phi = [upper](std::span<const double> x) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < upper.size(); ++k) m = std::min(m, upper[k] - x[k]);
                return m;
            };
            auto grad = [upper](std::span<const double> x, std::span<double> g) {
                std::size_t arg = 0;
                for (std::size_t k = 1; k < upper.size(); ++k) {
                    if (upper[k] - x[k] < upper[arg] - x[arg]) arg = k;
                }
                std::fill(g.begin(), g.end(), 0.0);
                g[arg] = -1.0;
            };
            return SafeSet{phi, grad};
        }
    }
    throw DomainError("unknown barrier kind");
}

ExitRecord first_passage_euler(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0,
                               double s_max, Passage passage, RngStream& rng, const EulerOptions& options) {
    const double ds = options.ds;
    if (!(ds > 0.0)) throw DomainError("Euler step must be positive");
    if (static_cast<int>(x0.size()) != sys.dim) throw DomainError("initial state has the wrong dimension");
    const auto dim = static_cast<std::size_t>(sys.dim);

    ExitRecord rec;
    std::array<double, 2> x{};
    std::copy(x0.begin(), x0.end(), x.begin());
    const std::span<double> xs(x.data(), dim);
    const std::span<const double> xc(x.data(), dim);

    double phi = safe.barrier(xc);
    if (reached(phi, passage)) {
        rec.exited = true;
        return rec;
    }
    if (!(s_max > 0.0)) return rec;

    const auto steps = static_cast<std::size_t>(std::ceil(s_max / ds - 1e-9));
    rec.capped_at = static_cast<double>(steps) * ds;

    const double alpha = sys.stable.alpha();
    const bool bridge = options.gaussian_bridge && alpha == 2.0;
    const bool clamp = !options.clamp_lower.empty() || !options.clamp_upper.empty();

    std::array<double, 2> f{};
    std::array<double, 2> noise{};
    std::array<double, 2> normal{};
    std::array<double, 2> prev{};

    for (std::size_t k = 1; k <= steps; ++k) {
        sys.drift(xc, std::span<double>(f.data(), dim));
        const double sigma = sys.noise_scale(xc);
        noise = {0.0, 0.0};
        add_levy_increment(sys.stable, std::pow(sigma, alpha) * ds, rng, std::span<double>(noise.data(), dim));
        prev = x;
        for (std::size_t d = 0; d < dim; ++d) x[d] += f[d] * ds + noise[d];
        if (clamp) {
            for (std::size_t d = 0; d < dim; ++d) {
                if (d < options.clamp_lower.size()) x[d] = std::max(x[d], options.clamp_lower[d]);
                if (d < options.clamp_upper.size()) x[d] = std::min(x[d], options.clamp_upper[d]);
            }
        }
        const double t = static_cast<double>(k) * ds;

        bool finite = true;
        for (std::size_t d = 0; d < dim; ++d) finite = finite && std::isfinite(x[d]);
        if (!finite) {
            rec.non_finite = true;
            rec.exited = passage == Passage::exit;
            rec.exit_op_time = t;
            return rec;
        }

        const double phi_prev = phi;
        phi = safe.barrier(xc);
        if (reached(phi, passage)) {
            rec.exited = true;
            rec.exit_op_time = t;
            return rec;
        }
        if (bridge && sigma > 0.0) {
            const std::span<const double> pc(prev.data(), dim);
            const double d0 = distance_and_normal(safe, pc, phi_prev, std::span<double>(normal.data(), dim));
            std::array<double, 2> n1{};
            const double d1 = distance_and_normal(safe, xc, phi, std::span<double>(n1.data(), dim));
            double v = 0.0;
            for (const auto& atom : sys.stable.atoms()) {
                double p = 0.0;
                for (std::size_t d = 0; d < dim; ++d) p += atom.direction[d] * normal[d];
                v += atom.weight * p * p;
            }
            v *= 2.0 * sigma * sigma;
            if (v > 0.0 && std::isfinite(d0) && std::isfinite(d1)) {
                const double p_cross = std::exp(-2.0 * d0 * d1 / (v * ds));
                if (p_cross > 1e-300 && rng.uniform() < p_cross) {
                    rec.exited = true;
                    rec.exit_op_time = t;
                    return rec;
                }
            }
        }
    }
    return rec;
}

ExitRecord first_exit_time_euler(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0,
                                 double s_max, double ds, RngStream& rng) {
    EulerOptions options;
    options.ds = ds;
    return first_passage_euler(sys, safe, x0, s_max, Passage::exit, rng, options);
}

ExitRecord first_recovery_time_euler(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0,
                                     double s_max, double ds, RngStream& rng) {
    EulerOptions options;
    options.ds = ds;
    return first_passage_euler(sys, safe, x0, s_max, Passage::recovery, rng, options);
}

CtmcSimulator::CtmcSimulator(const GeneratorMatrix& gen) : unknown_of_cell_(gen.unknown_of_cell()) {
    const auto& q = gen.rates();
    const auto n = static_cast<std::size_t>(q.rows());
    row_start_.reserve(n + 1);
    total_rate_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        row_start_.push_back(dest_.size());
        double running = 0.0;
        for (GeneratorMatrix::Rates::InnerIterator it(q, static_cast<Eigen::Index>(i)); it; ++it) {
            if (static_cast<std::size_t>(it.col()) == i || it.value() <= 0.0) continue;
            running += it.value();
            dest_.push_back(static_cast<std::size_t>(it.col()));
            cumulative_.push_back(running);
        }
        const double a = gen.absorption()[static_cast<Eigen::Index>(i)];
        if (a > 0.0) {
            running += a;
            dest_.push_back(kAbsorb);
            cumulative_.push_back(running);
        }
        total_rate_[i] = running;
    }
    row_start_.push_back(dest_.size());
}

ExitRecord CtmcSimulator::exit_time(std::size_t cell, double s_max, RngStream& rng) const {
    if (cell >= unknown_of_cell_.size() || unknown_of_cell_[cell] < 0) {
        throw DomainError("chain must start in a cell of the generator's region");
    }
    auto state = static_cast<std::size_t>(unknown_of_cell_[cell]);
    ExitRecord rec;
    rec.capped_at = s_max;
    double t = 0.0;
    for (;;) {
        const double rate = total_rate_[state];
        if (rate <= 0.0) return rec;
        t += rng.exponential() / rate;
        if (t > s_max) return rec;
        const double target = rng.uniform() * rate;
        const auto begin = cumulative_.begin() + static_cast<std::ptrdiff_t>(row_start_[state]);
        const auto end = cumulative_.begin() + static_cast<std::ptrdiff_t>(row_start_[state + 1]);
        auto it = std::upper_bound(begin, end, target);
        if (it == end) --it;
        const std::size_t next = dest_[static_cast<std::size_t>(it - cumulative_.begin())];
        if (next == kAbsorb) {
            rec.exited = true;
            rec.exit_op_time = t;
            return rec;
        }
        state = next;
    }
}

ExitRecord gillespie_exit_time(const CtmcSimulator& chain, std::size_t cell0, double s_max, RngStream& rng) {
    return chain.exit_time(cell0, s_max, rng);
}

}  // namespace fracrisk
