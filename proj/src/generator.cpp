#include "fracrisk/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fracrisk/errors.hpp"

namespace fracrisk {

namespace {

constexpr std::size_t kWraps = 4000;

bool in_region(Region region, double phi) { return region == Region::safe_interior ? phi > 0.0 : phi < 0.0; }

// sum_{m >= 1} int_{(m-1/2)h}^{(m+1/2)h} (y - m h) y^{-1-alpha} dy
double lumping_offset(double alpha, double h) {
    static constexpr std::array<double, 5> nodes{0.0, 0.5384693101056831, 0.9061798459386640,
                                                  -0.5384693101056831, -0.9061798459386640};
    static constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665, 0.2369268850561891,
                                                    0.4786286704993665, 0.2369268850561891};
    constexpr int kCells = 4000;
    double sum = 0.0;
    for (int m = kCells; m >= 1; --m) {
        double cell = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const double u = 0.5 * nodes[q];  // offset in units of h
            cell += weights[q] * u * std::pow(m + u, -1.0 - alpha);
        }
        sum += 0.5 * cell;
    }
    // Remaining cells: f'(m) / 12 summed from kCells + 1/2 on.
    sum -= std::pow(kCells + 0.5, -1.0 - alpha) / 12.0;
    return sum * std::pow(h, 1.0 - alpha);
}

// Per-axis jump data shared by all source cells: tail[m] = ((m - 1/2) h)^-alpha,
// so the unit-intensity mass of offsets m is tail[m] - tail[m + 1].
struct AxisKernel {
    double c_plus = 0.0;
    double c_minus = 0.0;
    double diffusion = 0.0;  // matched second-moment rate coefficient (times 1/h^2 already)
    double drift = 0.0;      // centring drift per unit sigma^alpha
    double near_plus = 0.0;  // jump mass landing on the adjacent cell
    double near_minus = 0.0;
    std::vector<double> tail;
    // Periodic only: wrapped mass per residue for each side.
    std::vector<double> wrapped_plus;
    std::vector<double> wrapped_minus;
};

AxisKernel make_kernel(const StableParams& stable, int axis, const Axis& ax, bool periodic) {
    AxisKernel k;
    const double alpha = stable.alpha();
    const double h = ax.width();
    const double w_plus = stable.dim() == 1 ? stable.axis_weight(0, 1) : stable.axis_weight(axis, 1);
    const double w_minus = stable.dim() == 1 ? stable.axis_weight(0, -1) : stable.axis_weight(axis, -1);
    if (alpha == 2.0) {
        k.diffusion = (w_plus + w_minus) / (h * h);
        return k;
    }
    const double kappa = jump_intensity(alpha);
    k.c_plus = kappa * w_plus / alpha;
    k.c_minus = kappa * w_minus / alpha;
    const double c_sum = kappa * (w_plus + w_minus);
    const double c_diff = kappa * (w_plus - w_minus);
    const double half = h / 2.0;
    // Sub-cell jumps: (1/2) int_{|y|<h/2} y^2 nu(dy) as a nearest-neighbour rate.
    k.diffusion = 0.5 * c_sum * std::pow(half, 2.0 - alpha) / (2.0 - alpha) / (h * h);
    if (alpha == 1.0) {
        // Truncation at |y| < 1 plus the constant that removes the linear term
        // from int (e^{i xi y} - 1 - i xi y 1{|y|<1}) |y|^-2 dy.
        k.drift = -c_diff * (1.0 - std::numbers::egamma + std::log(1.0 / half));
    } else {
        // alpha < 1: first moment of the retained small jumps;
        // alpha > 1: minus the first moment of the cell-resolved jumps.
        k.drift = c_diff * std::pow(half, 1.0 - alpha) / (1.0 - alpha);
    }
    // Moving each resolved jump to its cell centre shifts the first moment.
    k.drift += c_diff * lumping_offset(alpha, h);

    const std::size_t n = ax.cells;
    const std::size_t span_cells = periodic ? n * (kWraps + 1) + 1 : n + 1;
    k.tail.resize(span_cells + 1);
    k.tail[0] = 0.0;  // unused
    for (std::size_t m = 1; m <= span_cells; ++m) k.tail[m] = std::pow((static_cast<double>(m) - 0.5) * h, -alpha);
    k.near_plus = k.c_plus * (k.tail[1] - k.tail[2]);
    k.near_minus = k.c_minus * (k.tail[1] - k.tail[2]);
    if (periodic) {
        k.wrapped_plus.assign(n, 0.0);
        for (std::size_t m = 1; m < span_cells; ++m) k.wrapped_plus[m % n] += k.tail[m] - k.tail[m + 1];
        // Remaining far mass spreads evenly over residues.
        for (double& v : k.wrapped_plus) v += k.tail[span_cells] / static_cast<double>(n);
        k.wrapped_plus[0] = 0.0;
        k.wrapped_minus = k.wrapped_plus;
        for (double& v : k.wrapped_plus) v *= k.c_plus;
        for (double& v : k.wrapped_minus) v *= k.c_minus;
        k.wrapped_plus[1] -= k.near_plus;
        k.wrapped_minus[1] -= k.near_minus;
        k.tail.clear();
    }
    return k;
}

class RowBuilder {
public:
    explicit RowBuilder(std::size_t n) : row_(n, 0.0), touched_flag_(n, 0) {}

    void add(std::size_t unknown, double rate) {
        if (rate == 0.0) return;
        if (!touched_flag_[unknown]) {
            touched_flag_[unknown] = 1;
            touched_.push_back(unknown);
        }
        row_[unknown] += rate;
    }
    void absorb(double rate) { absorbed_ += rate; }

    void flush(std::size_t row, std::vector<Eigen::Triplet<double>>& triplets, double& absorption) {
        double out = absorbed_;
        for (std::size_t j : touched_) {
            if (j != row && row_[j] > 0.0) {
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(j), row_[j]);
                out += row_[j];
            }
            row_[j] = 0.0;
            touched_flag_[j] = 0;
        }
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), -out);
        absorption = absorbed_;
        touched_.clear();
        absorbed_ = 0.0;
    }

private:
    std::vector<double> row_;
    std::vector<char> touched_flag_;
    std::vector<std::size_t> touched_;
    double absorbed_ = 0.0;
};

}  // namespace

GeneratorMatrix::GeneratorMatrix(Grid grid, Region region, StableParams stable, bool periodic, Rates rates,
                                 Eigen::VectorXd absorption, std::vector<std::ptrdiff_t> unknown_of_cell,
                                 std::vector<std::size_t> cell_of_unknown, std::vector<double> sigma_samples,
                                 std::vector<double> drift_samples)
    : grid_(std::move(grid)),
      region_(region),
      stable_(std::move(stable)),
      periodic_(periodic),
      rates_(std::move(rates)),
      absorption_(std::move(absorption)),
      unknown_of_cell_(std::move(unknown_of_cell)),
      cell_of_unknown_(std::move(cell_of_unknown)),
      sigma_samples_(std::move(sigma_samples)),
      drift_samples_(std::move(drift_samples)) {}

GeneratorMatrix build_generator(const SystemSpec& sys, const Grid& grid, const SafeSet& safe, Region region,
                                const GeneratorOptions& options) {
    const int dim = grid.dim();
    if (dim != sys.dim || sys.stable.dim() != dim) throw DomainError("grid and system dimensions differ");
    if (dim == 2 && sys.stable.alpha() < 2.0 && !sys.stable.axis_aligned()) {
        throw DomainError("2D generator requires axis-aligned spectral atoms");
    }
    if (options.periodic && dim != 1) throw DomainError("periodic generator is 1D only");

    const std::size_t n_cells = grid.size();
    std::vector<std::ptrdiff_t> unknown_of_cell(n_cells, -1);
    std::vector<std::size_t> cell_of_unknown;
    for (std::size_t c = 0; c < n_cells; ++c) {
        const auto x = grid.center(c);
        const double phi = safe.barrier(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
        if (options.periodic || in_region(region, phi)) {
            unknown_of_cell[c] = static_cast<std::ptrdiff_t>(cell_of_unknown.size());
            cell_of_unknown.push_back(c);
        }
    }
    const std::size_t n = cell_of_unknown.size();
    if (n == 0) throw DomainError("region contains no grid cells");

    // Whether the strip just beyond each grid edge belongs to the region,
    // evaluated per source cell at the ghost-cell centre.
    auto beyond_in_region = [&](std::array<double, 2> x, int axis, int side) {
        const Axis& ax = grid.axis(axis);
        x[static_cast<std::size_t>(axis)] = side > 0 ? ax.upper + ax.width() / 2 : ax.lower - ax.width() / 2;
        return in_region(region, safe.barrier(std::span<const double>(x.data(), static_cast<std::size_t>(dim))));
    };

    std::vector<AxisKernel> kernels;
    for (int d = 0; d < dim; ++d) kernels.push_back(make_kernel(sys.stable, d, grid.axis(d), options.periodic));

    const double alpha = sys.stable.alpha();
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd absorption = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> sigma_samples(n);
    std::vector<double> drift_samples(n * static_cast<std::size_t>(dim));
    RowBuilder row(n);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = cell_of_unknown[i];
        const auto idx = grid.unflat(cell);
        const auto x = grid.center(cell);
        const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
        std::array<double, 2> f{};
        sys.drift(xs, std::span<double>(f.data(), static_cast<std::size_t>(dim)));
        const double sigma = sys.noise_scale(xs);
        if (!(sigma >= 0.0)) throw DomainError("noise scale must be nonnegative on the grid");
        const double s_alpha = std::pow(sigma, alpha);
        sigma_samples[i] = sigma;
        for (int d = 0; d < dim; ++d) drift_samples[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)] = f[static_cast<std::size_t>(d)];

        for (int d = 0; d < dim; ++d) {
            const Axis& ax = grid.axis(d);
            const auto ncell = static_cast<std::ptrdiff_t>(ax.cells);
            const auto pos = static_cast<std::ptrdiff_t>(idx[static_cast<std::size_t>(d)]);
            const AxisKernel& k = kernels[static_cast<std::size_t>(d)];
            const double h = ax.width();

            auto cell_at = [&](std::ptrdiff_t p) {
                auto moved = idx;
                moved[static_cast<std::size_t>(d)] = static_cast<std::size_t>(p);
                return grid.flat(moved);
            };
            auto deposit = [&](std::ptrdiff_t p, double rate) {
                const auto u = unknown_of_cell[cell_at(p)];
                if (u < 0) {
                    row.absorb(rate);
                } else {
                    row.add(static_cast<std::size_t>(u), rate);
                }
            };
            auto leave_grid = [&](int side, double rate) {
                if (options.far_field == FarField::clamp && beyond_in_region(x, d, side)) {
                    const std::ptrdiff_t edge = side > 0 ? ncell - 1 : 0;
                    if (edge != pos) deposit(edge, rate);
                } else {
                    row.absorb(rate);
                }
            };
            auto neighbour = [&](int side, double rate) {
                if (rate == 0.0) return;
                std::ptrdiff_t p = pos + side;
                if (options.periodic) {
                    deposit(((p % ncell) + ncell) % ncell, rate);
                } else if (p < 0 || p >= ncell) {
                    leave_grid(side, rate);
                } else {
                    deposit(p, rate);
                }
            };

            const double diffusion_rate = s_alpha * k.diffusion;
            double up = diffusion_rate + s_alpha * k.near_plus;
            double down = diffusion_rate + s_alpha * k.near_minus;
            // Centring drift plus f, carried by moving rate between the two
            // neighbours (central differencing, second moment unchanged) as
            // far as their rates allow; the excess is upwinded.
            const double total = up + down;
            const double target = up - down + (s_alpha * k.drift + f[static_cast<std::size_t>(d)]) / h;
            const double shift = std::clamp(target, -total, total);
            up = 0.5 * (total + shift);
            down = 0.5 * (total - shift);
            const double v = (target - shift) * h;
            if (alpha < 2.0) {
                if (options.periodic) {
                    for (std::ptrdiff_t r = 1; r < ncell; ++r) {
                        const auto ru = static_cast<std::size_t>(r);
                        deposit((pos + r) % ncell, s_alpha * k.wrapped_plus[ru]);
                        deposit(((pos - r) % ncell + ncell) % ncell, s_alpha * k.wrapped_minus[ru]);
                    }
                } else {
                    for (int side : {1, -1}) {
                        const double c = s_alpha * (side > 0 ? k.c_plus : k.c_minus);
                        if (c == 0.0) continue;
                        std::ptrdiff_t m = 2;
                        for (;; ++m) {
                            const std::ptrdiff_t p = pos + side * m;
                            if (p < 0 || p >= ncell) break;
                            const auto mu = static_cast<std::size_t>(m);
                            deposit(p, c * (k.tail[mu] - k.tail[mu + 1]));
                        }
                        leave_grid(side, c * k.tail[static_cast<std::size_t>(m)]);
                    }
                }
            }
            neighbour(1, up);
            neighbour(-1, down);
            if (v > 0.0) {
                neighbour(1, v / h);
            } else if (v < 0.0) {
                neighbour(-1, -v / h);
            }
        }
        double a = 0.0;
        row.flush(i, triplets, a);
        absorption[static_cast<Eigen::Index>(i)] = a;
    }

    GeneratorMatrix::Rates rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    rates.setFromTriplets(triplets.begin(), triplets.end());
    rates.makeCompressed();
    return GeneratorMatrix(grid, region, sys.stable, options.periodic, std::move(rates), std::move(absorption),
                           std::move(unknown_of_cell), std::move(cell_of_unknown), std::move(sigma_samples),
                           std::move(drift_samples));
}

std::complex<double> symbol_check(const GeneratorMatrix& gen, std::span<const double> xi) {
    const auto& grid = gen.grid();
    const auto dim = static_cast<std::size_t>(grid.dim());
    if (xi.size() != dim) throw DomainError("xi has the wrong dimension");
    const std::size_t n = gen.size();
    std::vector<std::complex<double>> wave(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.center(gen.cell_of_unknown()[i]);
        double phase = 0.0;
        for (std::size_t d = 0; d < dim; ++d) phase += xi[d] * x[d];
        wave[i] = std::polar(1.0, phase);
    }
    std::complex<double> num{0.0, 0.0};
    const auto& q = gen.rates();
    for (std::size_t i = 0; i < n; ++i) {
        std::complex<double> applied{0.0, 0.0};
        for (GeneratorMatrix::Rates::InnerIterator it(q, static_cast<Eigen::Index>(i)); it; ++it) {
            applied += it.value() * wave[static_cast<std::size_t>(it.col())];
        }
        num += std::conj(wave[i]) * applied;
    }
    return num / static_cast<double>(n);
}

std::complex<double> symbol_check(const GeneratorMatrix& gen, double xi) {
    const double v[1] = {xi};
    return symbol_check(gen, std::span<const double>(v, 1));
}

}  // namespace fracrisk
