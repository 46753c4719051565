#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fracrisk/errors.hpp"
#include "fracrisk/generator.hpp"
#include "fracrisk/mittag_leffler.hpp"
#include "fracrisk/solver.hpp"

using namespace fracrisk;

namespace {

// One cell [0, 1] draining out of {x > 0} at rate lambda through the drift.
GeneratorMatrix relaxation_cell(double lambda) {
    const auto sys = SystemSpec::constant({-lambda}, 0.0, StableParams::one_dimensional(2.0, 0.5, 0.5), SubordinatorParams(1.0));
    return build_generator(sys, Grid({Axis{0.0, 1.0, 1}}), SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {0.0}}),
                           Region::safe_interior);
}

GeneratorMatrix case_one(std::size_t cells, double lower = -3.0) {
    const auto sys = SystemSpec::constant({0.8}, 0.4, StableParams::one_dimensional(1.0, 0.5, 0.5), SubordinatorParams(1.0));
    GeneratorOptions o;
    o.far_field = FarField::clamp;
    return build_generator(sys, Grid({Axis{lower, 1.0, cells}}), SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {1.0}}),
                           Region::complement, o);
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("caputo weights") {
    const auto w = caputo_weights(0.7, 5, 0.01);
    CHECK(w.b[0] == 1.0);
    CHECK(w.b[1] == doctest::Approx(std::pow(2.0, 0.3) - 1.0));
    CHECK(w.b[1] == doctest::Approx(0.231144).epsilon(1e-6));
    CHECK(w.scale == doctest::Approx(1.0 / (std::tgamma(1.3) * std::pow(0.01, 0.7))));
    const auto one = caputo_weights(1.0, 10, 0.1);
    CHECK(one.b[0] == 1.0);
    for (std::size_t k = 1; k < one.b.size(); ++k) CHECK(one.b[k] == 0.0);
    const auto w4 = caputo_weights(0.4, 1000, 1e-3);
    for (std::size_t k = 1; k < w4.b.size(); ++k) REQUIRE(w4.b[k] < w4.b[k - 1]);
    CHECK(w4.b.back() > 0.0);
    CHECK_THROWS_AS(caputo_weights(0.0, 3, 0.1), DomainError);
}

TEST_CASE("mittag-leffler special values") {
    CHECK(mittag_leffler(0.3, 0.0) == 1.0);
    CHECK(mittag_leffler(1.0, -1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    for (double x : {0.5, 1.0, 2.0, 4.0}) {
        // E_{1/2}(-x) = exp(x^2) erfc(x)
        CHECK(mittag_leffler(0.5, -x) == doctest::Approx(std::exp(x * x) * std::erfc(x)).epsilon(1e-10));
    }
    double prev = 1.0;
    for (double z = -0.25; z > -50.0; z *= 1.5) {
        const double v = mittag_leffler(0.6, z);
        REQUIRE(v > 0.0);
        REQUIRE(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(mittag_leffler(0.5, 1.0), DomainError);
    CHECK_THROWS_AS(mittag_leffler(1.5, -1.0), DomainError);
}

TEST_CASE("initial condition only") {
    const auto F = solve_safety(case_one(40), SubordinatorParams(0.5), {0.0});
    REQUIRE(F.n_times() == 1);
    for (std::size_t c = 0; c < F.grid.size(); ++c) CHECK(F.at(0, c) == (F.in_region[c] ? 1.0 : 0.0));
}

TEST_CASE("fractional relaxation follows the Mittag-Leffler law") {
    for (double beta : {0.4, 0.7}) {
        const double lambda = 2.0;
        const auto F = solve_safety(relaxation_cell(lambda), SubordinatorParams(beta), uniform_time_grid(1.0, 1e-3));
        double worst = 0.0;
        for (std::size_t t = 1; t < F.n_times(); ++t) {
            const double ref = mittag_leffler(beta, -lambda * std::pow(F.times[t], beta));
            worst = std::max(worst, std::abs(F.at(t, 0) - ref) / ref);
        }
        CAPTURE(beta);
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("memoryless solve is backward Euler") {
    const auto gen = case_one(60);
    const double dt = 0.01;
    const auto F = solve_safety(gen, SubordinatorParams(1.0), uniform_time_grid(0.5, dt));
    const Eigen::MatrixXd q(gen.rates());
    const auto n = q.rows();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) / dt - q);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    for (std::size_t t = 1; t < F.n_times(); ++t) {
        u = lu.solve(u / dt);
        for (Eigen::Index i = 0; i < n; ++i) {
            REQUIRE(std::abs(F.at(t, gen.cell_of_unknown()[static_cast<std::size_t>(i)]) - u[i]) <= 1e-12);
        }
    }
}

TEST_CASE("uniform L1 scheme matches a direct transcription") {
    SolverOptions plain;
    plain.startup_intervals = 0;
    const auto gen = case_one(30);
    const double beta = 0.6, dt = 0.02;
    const std::size_t steps = 25;
    const auto F = solve_safety(gen, SubordinatorParams(beta), uniform_time_grid(dt * steps, dt), plain);
    const auto w = caputo_weights(beta, steps, dt);
    const Eigen::MatrixXd q(gen.rates());
    const auto n = q.rows();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(w.scale * Eigen::MatrixXd::Identity(n, n) - q);
    std::vector<Eigen::VectorXd> u{Eigen::VectorXd::Ones(n)};
    for (std::size_t m = 1; m <= steps; ++m) {
        Eigen::VectorXd rhs = w.b[m - 1] * u[0];
        for (std::size_t k = 1; k < m; ++k) rhs += (w.b[k - 1] - w.b[k]) * u[m - k];
        u.push_back(lu.solve(w.scale * rhs));
        for (Eigen::Index i = 0; i < n; ++i) {
            REQUIRE(std::abs(F.at(m, gen.cell_of_unknown()[static_cast<std::size_t>(i)]) - u[m][i]) <= 1e-12);
        }
    }
}

TEST_CASE("recovery is one minus safety of the complement") {
    const auto gen = case_one(80);
    for (double beta : {0.5, 1.0}) {
        const auto times = uniform_time_grid(0.3, 0.01);
        const auto R = solve_recovery(gen, SubordinatorParams(beta), times);
        const auto F = solve_safety(gen, SubordinatorParams(beta), times);
        for (std::size_t t = 0; t < R.n_times(); ++t) {
            for (std::size_t c = 0; c < R.grid.size(); ++c) {
                if (!R.in_region[c]) continue;
                REQUIRE(std::abs(R.at(t, c) + F.at(t, c) - 1.0) <= 1e-12);
            }
        }
        CHECK(R.kind == RiskKind::recovery);
        CHECK(R.exterior_value == 1.0);
        for (std::size_t c = 0; c < R.grid.size(); ++c) {
            if (R.in_region[c]) CHECK(R.at(0, c) == 0.0);
        }
        CHECK(field_stats(R).ok());
    }
}

TEST_CASE("maximum principle and monotonicity across settings") {
    for (double beta : {0.3, 0.7, 1.0}) {
        const auto R = solve_recovery(case_one(50), SubordinatorParams(beta), uniform_time_grid(1.0, 0.02));
        const auto st = field_stats(R);
        CHECK(st.ok());
        CHECK(st.min_value >= -1e-9);
        CHECK(st.max_value <= 1.0 + 1e-9);
        CHECK_NOTHROW(validate_field(R));
    }
}

TEST_CASE("validation rejects broken fields") {
    auto F = solve_safety(case_one(20), SubordinatorParams(1.0), uniform_time_grid(0.1, 0.05));
    F.values[F.grid.size() * 2 + 5] = 1.5;
    CHECK_THROWS_AS(validate_field(F), InvariantViolation);
    CHECK(field_stats(F).bound_violations == 1);
    CHECK_THROWS_AS(solve_safety(case_one(20), SubordinatorParams(1.0), {0.0, 0.1, 0.3}), DomainError);
}

TEST_CASE("iterative path agrees with the direct factorization") {
    const auto sys = SystemSpec::constant({0.3, -0.2}, 0.3, StableParams::symmetric_axes(1.5, 2, 1.0), SubordinatorParams(0.7));
    const auto gen = build_generator(sys, Grid({Axis{0.0, 1.0, 16}, Axis{0.0, 1.0, 16}}),
                                     SafeSet::from_spec({BarrierSpec::Kind::box_below, {1.0, 1.0}}), Region::safe_interior);
    SolverOptions direct;
    direct.dense_limit = 0;
    SolverOptions iterative = direct;
    iterative.direct_limit = 0;
    iterative.iterative_tolerance = 1e-12;
    const auto times = uniform_time_grid(0.25, 1.0 / 32.0);
    const auto a = solve_safety(gen, SubordinatorParams(0.7), times, direct);
    const auto b = solve_safety(gen, SubordinatorParams(0.7), times, iterative);
    CHECK(a.provenance.at("linear_solver") == "sparse_lu");
    CHECK(b.provenance.at("linear_solver") == "bicgstab_ilut");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    CHECK(worst < 1e-8);
}

TEST_CASE("grid refinement shrinks the error monotonically") {
    // h = 0.04, 0.02, 0.01 against h = 0.005 on the jump recovery problem.
    const auto times = uniform_time_grid(0.5, 0.005);
    const auto fine = solve_recovery(case_one(800), SubordinatorParams(1.0), times);
    double prev = 1e9;
    for (std::size_t cells : {100u, 200u, 400u}) {
        const auto coarse = solve_recovery(case_one(cells), SubordinatorParams(1.0), times);
        double worst = 0.0;
        for (double x = -2.9; x < 0.96; x += 0.1) {
            const std::vector<double> p{x};
            for (double T : {0.1, 0.25, 0.5}) worst = std::max(worst, std::abs(coarse.interpolate(p, T) - fine.interpolate(p, T)));
        }
        CAPTURE(cells);
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 0.02);
}

TEST_CASE("field csv export") {
    const auto F = solve_safety(relaxation_cell(1.0), SubordinatorParams(1.0), uniform_time_grid(0.2, 0.1));
    std::ostringstream out;
    write_field_csv(F, out);
    const auto text = out.str();
    CHECK(text.rfind("x1,T,value\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

}
