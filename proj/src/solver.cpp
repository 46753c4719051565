#include "fracrisk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "fracrisk/errors.hpp"

namespace fracrisk {

namespace {

constexpr double kBoundTol = 1e-9;
constexpr double kMonotoneTol = 1e-8;

// Factorized (shift I - Q) for one shift value.
class ShiftedSolver {
public:
    enum class Method { dense, sparse_lu, bicgstab };

    ShiftedSolver(const GeneratorMatrix::Rates& q, double shift, const SolverOptions& options) {
        const auto n = static_cast<std::size_t>(q.rows());
        const auto nnz = static_cast<std::size_t>(q.nonZeros());
        // BiCGSTAB keeps a reference to its matrix, so the matrix lives in the object.
        auto& a = matrix_;
        {
            Eigen::SparseMatrix<double> id(q.rows(), q.cols());
            id.setIdentity();
            a = shift * id - Eigen::SparseMatrix<double>(q);
            a.makeCompressed();
        }
        if (n <= options.dense_limit && (nnz * 8 >= n * n || n <= 64)) {
            method_ = Method::dense;
            dense_.compute(Eigen::MatrixXd(a));
            matrix_ = {};
        } else if (n <= options.direct_limit) {
            method_ = Method::sparse_lu;
            sparse_.analyzePattern(a);
            sparse_.factorize(a);
            if (sparse_.info() != Eigen::Success) {
                throw SolveError("sparse LU factorization failed: " + sparse_.lastErrorMessage());
            }
            matrix_ = {};
        } else {
            method_ = Method::bicgstab;
            iterative_.setTolerance(options.iterative_tolerance);
            iterative_.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, n / 4)));
            iterative_.compute(a);
            if (iterative_.info() != Eigen::Success) throw SolveError("ILUT preconditioner setup failed");
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& guess) {
        switch (method_) {
            case Method::dense:
                return dense_.solve(rhs);
            case Method::sparse_lu: {
                Eigen::VectorXd x = sparse_.solve(rhs);
                if (sparse_.info() != Eigen::Success) throw SolveError("sparse LU solve failed");
                return x;
            }
            case Method::bicgstab: {
                Eigen::VectorXd x = iterative_.solveWithGuess(rhs, guess);
                if (iterative_.info() != Eigen::Success) {
                    std::ostringstream msg;
                    msg << "BiCGSTAB did not converge: iterations=" << iterative_.iterations()
                        << " relative_residual=" << iterative_.error();
                    throw SolveError(msg.str());
                }
                return x;
            }
        }
        return {};
    }

    const char* name() const noexcept {
        switch (method_) {
            case Method::dense:
                return "dense_lu";
            case Method::sparse_lu:
                return "sparse_lu";
            case Method::bicgstab:
                return "bicgstab_ilut";
        }
        return "";
    }

private:
    Method method_ = Method::dense;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::PartialPivLU<Eigen::MatrixXd> dense_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> sparse_;
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> iterative_;
};

// Computational mesh: output times plus graded start-up points.
struct Mesh {
    std::vector<double> t;     // t[0] = 0
    std::vector<double> step;  // step[n] = t[n] - t[n-1]; nominal dt on uniform intervals
    std::vector<std::size_t> output_index;  // mesh index of each output time
};

Mesh build_mesh(const std::vector<double>& t_grid, double beta, const SolverOptions& options) {
    Mesh mesh;
    mesh.t.push_back(0.0);
    mesh.step.push_back(0.0);
    mesh.output_index.push_back(0);
    const std::size_t m = t_grid.size() - 1;
    if (m == 0) return mesh;
    const double dt = t_grid.back() / static_cast<double>(m);
    const std::size_t k = beta < 1.0 ? std::min(options.startup_intervals, m) : 0;
    if (k > 0 && options.startup_points > 0) {
        const double r = (2.0 - beta) / beta;
        const double t_k = t_grid[k];
        std::vector<double> pts;
        for (std::size_t j = 1; j <= options.startup_points; ++j) {
            pts.push_back(t_k * std::pow(static_cast<double>(j) / static_cast<double>(options.startup_points), r));
        }
        for (std::size_t j = 1; j <= k; ++j) pts.push_back(t_grid[j]);
        std::sort(pts.begin(), pts.end());
        for (double p : pts) {
            if (p - mesh.t.back() > 1e-12 * dt) {
                mesh.t.push_back(p);
            } else {
                mesh.t.back() = std::max(mesh.t.back(), p);
            }
        }
        std::size_t next = 1;
        for (std::size_t i = 1; i < mesh.t.size(); ++i) {
            mesh.step.push_back(mesh.t[i] - mesh.t[i - 1]);
            if (next <= k && std::abs(mesh.t[i] - t_grid[next]) <= 1e-12 * dt) {
                mesh.t[i] = t_grid[next];
                mesh.output_index.push_back(i);
                ++next;
            }
        }
        if (mesh.output_index.size() != k + 1) throw DomainError("start-up mesh lost an output time");
    }
    for (std::size_t i = k + 1; i <= m; ++i) {
        mesh.t.push_back(t_grid[i]);
        mesh.step.push_back(dt);
        mesh.output_index.push_back(mesh.t.size() - 1);
    }
    return mesh;
}

void check_time_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty() || t_grid.front() != 0.0) throw DomainError("time grid must start at 0");
    const std::size_t m = t_grid.size() - 1;
    if (m == 0) return;
    const double dt = t_grid.back() / static_cast<double>(m);
    if (!(dt > 0.0)) throw DomainError("time grid must be increasing");
    for (std::size_t i = 0; i <= m; ++i) {
        if (std::abs(t_grid[i] - static_cast<double>(i) * dt) > 1e-9 * std::max(1.0, t_grid.back())) {
            throw DomainError("time grid must be uniform");
        }
    }
}

// Weight of (u^j - u^{j-1}) in the L1 Caputo approximation at mesh point n.
double l1_weight(const Mesh& mesh, double beta, double gamma_2mb, std::size_t n, std::size_t j) {
    const double h = mesh.step[j];
    if (beta == 1.0) return j == n ? 1.0 / h : 0.0;
    if (j == n) return std::pow(h, -beta) / gamma_2mb;
    const double a = mesh.t[n] - mesh.t[j - 1];
    const double b = mesh.t[n] - mesh.t[j];
    return (std::pow(a, 1.0 - beta) - std::pow(b, 1.0 - beta)) / (gamma_2mb * h);
}

RiskField solve_on_region(const GeneratorMatrix& gen, const SubordinatorParams& sub,
                          const std::vector<double>& t_grid, const SolverOptions& options) {
    check_time_grid(t_grid);
    const double beta = sub.beta();
    const double gamma_2mb = std::tgamma(2.0 - beta);
    const Mesh mesh = build_mesh(t_grid, beta, options);
    const auto n_unknowns = static_cast<Eigen::Index>(gen.size());
    const std::size_t n_mesh = mesh.t.size() - 1;

    RiskField field;
    field.grid = gen.grid();
    field.times = t_grid;
    field.values.assign(t_grid.size() * gen.grid().size(), 0.0);
    field.in_region.assign(gen.grid().size(), 0);
    for (std::size_t c : gen.cell_of_unknown()) field.in_region[c] = 1;

    Eigen::VectorXd u = Eigen::VectorXd::Ones(n_unknowns);
    auto store = [&](std::size_t out, const Eigen::VectorXd& v) {
        double* row = field.values.data() + out * gen.grid().size();
        for (Eigen::Index i = 0; i < n_unknowns; ++i) row[gen.cell_of_unknown()[static_cast<std::size_t>(i)]] = v[i];
    };
    store(0, u);

    // Each distinct shift is factorized once and dropped after its last use.
    std::vector<double> shifts(n_mesh + 1, 0.0);
    std::map<double, std::size_t> remaining;
    for (std::size_t n = 1; n <= n_mesh; ++n) {
        shifts[n] = l1_weight(mesh, beta, gamma_2mb, n, n);
        ++remaining[shifts[n]];
    }
    std::map<double, std::unique_ptr<ShiftedSolver>> solvers;
    const std::size_t factorizations = remaining.size();
    Eigen::MatrixXd increments;
    if (beta < 1.0) increments.resize(n_unknowns, static_cast<Eigen::Index>(n_mesh));
    Eigen::VectorXd weights(static_cast<Eigen::Index>(n_mesh));
    std::size_t next_out = 1;
    const char* method = "none";

    for (std::size_t n = 1; n <= n_mesh; ++n) {
        const double shift = shifts[n];
        auto& solver = solvers[shift];
        if (!solver) solver = std::make_unique<ShiftedSolver>(gen.rates(), shift, options);
        method = solver->name();

        Eigen::VectorXd rhs = shift * u;
        if (beta < 1.0 && n > 1) {
            for (std::size_t j = 1; j < n; ++j) weights[static_cast<Eigen::Index>(j - 1)] = l1_weight(mesh, beta, gamma_2mb, n, j);
            const auto cols = static_cast<Eigen::Index>(n - 1);
            rhs.noalias() -= increments.leftCols(cols) * weights.head(cols);
        }
        Eigen::VectorXd next = solver->solve(rhs, u);
        if (--remaining[shift] == 0) solvers.erase(shift);
        if (!next.allFinite()) throw SolveError("linear solve produced non-finite values");
        if (beta < 1.0) increments.col(static_cast<Eigen::Index>(n - 1)) = next - u;
        u = std::move(next);
        if (next_out < mesh.output_index.size() && mesh.output_index[next_out] == n) store(next_out++, u);
    }

    field.provenance = {
        {"scheme", beta == 1.0 ? "backward_euler" : "l1"},
        {"beta", beta},
        {"dt", t_grid.size() > 1 ? t_grid.back() / static_cast<double>(t_grid.size() - 1) : 0.0},
        {"t_max", t_grid.back()},
        {"mesh_points", mesh.t.size()},
        {"startup_intervals", beta < 1.0 ? options.startup_intervals : 0},
        {"startup_points", beta < 1.0 ? options.startup_points : 0},
        {"linear_solver", method},
        {"factorizations", factorizations},
        {"iterative_tolerance", options.iterative_tolerance},
        {"unknowns", gen.size()},
        {"periodic", gen.periodic()},
    };
    return field;
}

}  // namespace

CaputoWeights caputo_weights(double beta, std::size_t n_steps, double dt) {
    if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("beta must lie in (0, 1]");
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    CaputoWeights w;
    w.beta = beta;
    w.scale = 1.0 / (std::tgamma(2.0 - beta) * std::pow(dt, beta));
    w.b.resize(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        if (beta == 1.0) {
            w.b[k] = k == 0 ? 1.0 : 0.0;
        } else {
            const auto kd = static_cast<double>(k);
            w.b[k] = std::pow(kd + 1.0, 1.0 - beta) - std::pow(kd, 1.0 - beta);
        }
    }
    return w;
}

std::vector<double> uniform_time_grid(double t_max, double dt) {
    if (!(t_max >= 0.0) || !(dt > 0.0)) throw DomainError("time grid needs t_max >= 0 and dt > 0");
    const auto steps = static_cast<std::size_t>(std::llround(std::ceil(t_max / dt - 1e-9)));
    std::vector<double> t(steps + 1, 0.0);
    for (std::size_t k = 1; k <= steps; ++k) t[k] = t_max * static_cast<double>(k) / static_cast<double>(steps);
    return t;
}

const char* to_string(RiskKind kind) noexcept { return kind == RiskKind::safety ? "safety" : "recovery"; }

double RiskField::interpolate(std::span<const double> x, double t) const {
    if (static_cast<int>(x.size()) != grid.dim()) throw DomainError("point has the wrong dimension");
    if (times.empty()) throw DomainError("field has no time levels");
    std::size_t t0 = 0;
    double tw = 0.0;
    if (t >= times.back()) {
        t0 = times.size() - 1;
    } else if (t > times.front()) {
        t0 = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
        tw = (t - times[t0]) / (times[t0 + 1] - times[t0]);
    }

    std::array<std::size_t, 2> lo{};
    std::array<double, 2> frac{};
    for (int d = 0; d < grid.dim(); ++d) {
        const Axis& ax = grid.axis(d);
        const double s = (x[static_cast<std::size_t>(d)] - ax.lower) / ax.width() - 0.5;
        const double top = static_cast<double>(ax.cells - 1);
        const double clamped = std::clamp(s, 0.0, top);
        auto i = static_cast<std::size_t>(std::floor(clamped));
        if (i + 1 > ax.cells - 1) i = ax.cells > 1 ? ax.cells - 2 : 0;
        lo[static_cast<std::size_t>(d)] = i;
        frac[static_cast<std::size_t>(d)] = ax.cells > 1 ? clamped - static_cast<double>(i) : 0.0;
    }

    auto spatial = [&](std::size_t ti) {
        double acc = 0.0;
        const int corners = 1 << grid.dim();
        for (int c = 0; c < corners; ++c) {
            std::array<std::size_t, 2> idx{};
            double w = 1.0;
            for (int d = 0; d < grid.dim(); ++d) {
                const auto du = static_cast<std::size_t>(d);
                const bool up = (c >> d) & 1;
                if (up && grid.axis(d).cells == 1) {
                    w = 0.0;
                    break;
                }
                idx[du] = lo[du] + (up ? 1 : 0);
                w *= up ? frac[du] : 1.0 - frac[du];
            }
            if (w != 0.0) acc += w * at(ti, grid.flat(idx));
        }
        return acc;
    };
    const double v0 = spatial(t0);
    return tw == 0.0 ? v0 : (1.0 - tw) * v0 + tw * spatial(t0 + 1);
}

FieldStats field_stats(const RiskField& field) {
    FieldStats s;
    s.min_value = 1.0;
    s.max_value = 0.0;
    const std::size_t cells = field.grid.size();
    const double dir = field.kind == RiskKind::safety ? 1.0 : -1.0;
    for (std::size_t t = 0; t < field.n_times(); ++t) {
        for (std::size_t c = 0; c < cells; ++c) {
            const double v = field.at(t, c);
            s.min_value = std::min(s.min_value, v);
            s.max_value = std::max(s.max_value, v);
            if (!(v >= -kBoundTol && v <= 1.0 + kBoundTol)) ++s.bound_violations;
            if (t > 0 && field.in_region[c]) {
                const double rise = dir * (v - field.at(t - 1, c));
                s.worst_monotonicity = std::max(s.worst_monotonicity, rise);
                if (rise > kMonotoneTol) ++s.monotonicity_violations;
            }
        }
    }
    return s;
}

void validate_field(const RiskField& field) {
    const FieldStats s = field_stats(field);
    if (!s.ok()) {
        std::ostringstream msg;
        msg << to_string(field.kind) << " field invariant broken: range [" << s.min_value << ", " << s.max_value
            << "], " << s.bound_violations << " bound and " << s.monotonicity_violations
            << " monotonicity violations (worst step " << s.worst_monotonicity << ")";
        throw InvariantViolation(msg.str());
    }
}

RiskField solve_safety(const GeneratorMatrix& gen, const SubordinatorParams& sub, const std::vector<double>& t_grid,
                       const SolverOptions& options) {
    RiskField field = solve_on_region(gen, sub, t_grid, options);
    field.kind = RiskKind::safety;
    field.exterior_value = 0.0;
    field.provenance["kind"] = "safety";
    validate_field(field);
    return field;
}

RiskField solve_recovery(const GeneratorMatrix& gen, const SubordinatorParams& sub,
                         const std::vector<double>& t_grid, const SolverOptions& options) {
    if (gen.region() != Region::complement) throw DomainError("recovery needs a generator on the complement region");
    RiskField field = solve_on_region(gen, sub, t_grid, options);
    field.kind = RiskKind::recovery;
    field.exterior_value = 1.0;
    const std::size_t cells = field.grid.size();
    for (std::size_t t = 0; t < field.n_times(); ++t) {
        for (std::size_t c = 0; c < cells; ++c) {
            double& v = field.values[t * cells + c];
            v = field.in_region[c] ? 1.0 - v : 1.0;
        }
    }
    field.provenance["kind"] = "recovery";
    validate_field(field);
    return field;
}

void write_field_csv(const RiskField& field, std::ostream& out) {
    const int dim = field.grid.dim();
    out << (dim == 1 ? "x1" : "x1,x2") << ",T,value\n";
    const auto precision = out.precision(17);
    for (std::size_t t = 0; t < field.n_times(); ++t) {
        for (std::size_t c = 0; c < field.grid.size(); ++c) {
            const auto x = field.grid.center(c);
            out << x[0];
            if (dim == 2) out << ',' << x[1];
            out << ',' << field.times[t] << ',' << field.at(t, c) << '\n';
        }
    }
    out.precision(precision);
}

}  // namespace fracrisk
