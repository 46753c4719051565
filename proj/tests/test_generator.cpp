#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fracrisk/errors.hpp"
#include "fracrisk/generator.hpp"

using namespace fracrisk;

namespace {

SafeSet everywhere() { return SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {-1e9}}); }

double rate(const GeneratorMatrix& g, std::size_t i, std::size_t j) {
    return g.rates().coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

void check_sub_markovian(const GeneratorMatrix& g) {
    const auto& q = g.rates();
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        double sum = 0.0, off = 0.0;
        for (GeneratorMatrix::Rates::InnerIterator it(q, i); it; ++it) {
            sum += it.value();
            if (it.col() != i) {
                REQUIRE(it.value() >= 0.0);
                off += it.value();
            }
        }
        REQUIRE(g.absorption()[i] >= 0.0);
        REQUIRE(std::abs(sum + g.absorption()[i]) <= 1e-9 * std::max(1.0, off));
    }
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("pure advection is a bidiagonal upwind matrix") {
    const double c = 0.6;
    const Grid grid({Axis{0.0, 1.0, 10}});
    const auto sys = SystemSpec::constant({c}, 0.0, StableParams::one_dimensional(1.5, 0.5, 0.5), SubordinatorParams(1.0));
    const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior);
    const double h = 0.1;
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            double expected = 0.0;
            if (j == i + 1) expected = c / h;
            if (j == i) expected = -c / h;
            CHECK(rate(g, i, j) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(g.absorption()[9] == doctest::Approx(c / h));
    check_sub_markovian(g);
}

TEST_CASE("alpha 2 rows are the central second difference") {
    const double sigma = 0.7;
    const Grid grid({Axis{-1.0, 1.0, 40}});
    const auto sys = SystemSpec::constant({0.0}, sigma, StableParams::one_dimensional(2.0, 0.3, 0.7), SubordinatorParams(1.0));
    const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior);
    const double h = 0.05, d = sigma * sigma / (h * h);
    for (std::size_t i = 1; i + 1 < 40; ++i) {
        CHECK(std::abs(rate(g, i, i - 1) - d) <= 1e-12 * d);
        CHECK(std::abs(rate(g, i, i + 1) - d) <= 1e-12 * d);
        CHECK(std::abs(rate(g, i, i) + 2.0 * d) <= 1e-12 * d);
        CHECK(g.rates().row(static_cast<Eigen::Index>(i)).nonZeros() == 3);
    }
}

TEST_CASE("alpha 2 with drift keeps the second moment and first moment f") {
    const Grid grid({Axis{0.0, 1.0, 50}});
    const double f = 0.9, sigma = 0.5, h = 0.02;
    const auto sys = SystemSpec::constant({f}, sigma, StableParams::one_dimensional(2.0, 0.5, 0.5), SubordinatorParams(1.0));
    const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior);
    const std::size_t i = 25;
    const double up = rate(g, i, i + 1), down = rate(g, i, i - 1);
    CHECK((up - down) * h == doctest::Approx(f).epsilon(1e-12));
    CHECK((up + down) * h * h == doctest::Approx(2.0 * sigma * sigma).epsilon(1e-12));
    check_sub_markovian(g);
}

TEST_CASE("far jump rates are exact cell integrals of the density") {
    const double alpha = 1.5, sigma = 0.8;
    const auto st = StableParams::one_dimensional(alpha, 1.0, 0.0);
    const Grid grid({Axis{0.0, 2.0, 200}});
    const double h = 0.01;
    const auto sys = SystemSpec::constant({0.0}, sigma, st, SubordinatorParams(1.0));
    const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior);
    const std::size_t i = 10;
    const double c_plus = jump_intensity(alpha) * 1.0;
    for (std::size_t m : {2u, 3u, 7u, 40u}) {
        const double dist = static_cast<double>(m) * h;
        const double closed = std::pow(sigma, alpha) * (c_plus / alpha) *
                              (std::pow(dist - h / 2, -alpha) - std::pow(dist + h / 2, -alpha));
        const double quad = std::pow(sigma, alpha) * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                                         [&](double y) { return levy_density_1d(st, y); }, dist - h / 2,
                                                         dist + h / 2, 8, 1e-13);
        CHECK(rate(g, i, i + m) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(rate(g, i, i + m) == doctest::Approx(quad).epsilon(1e-9));
        CHECK(rate(g, i + m, i) == 0.0);
    }
    check_sub_markovian(g);
}

TEST_CASE("symmetric driftless generator is mirror symmetric") {
    for (double alpha : {0.7, 1.0, 1.5, 2.0}) {
        const Grid grid({Axis{-1.0, 1.0, 31}});
        const auto sys = SystemSpec::constant({0.0}, 0.6, StableParams::one_dimensional(alpha, 0.5, 0.5), SubordinatorParams(1.0));
        const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior);
        for (std::size_t i = 0; i < 31; ++i) {
            CHECK(g.absorption()[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(g.absorption()[static_cast<Eigen::Index>(30 - i)]).epsilon(1e-12));
            for (std::size_t j = 0; j < 31; ++j) {
                REQUIRE(rate(g, i, j) == doctest::Approx(rate(g, 30 - i, 30 - j)).epsilon(1e-12));
            }
        }
        check_sub_markovian(g);
    }
}

TEST_CASE("rows are sub-Markovian for skewed and 2D generators") {
    for (double alpha : {0.6, 1.0, 1.3, 1.9}) {
        const auto sys = SystemSpec::constant({-0.4}, 0.5, StableParams::one_dimensional(alpha, 0.9, 0.1), SubordinatorParams(1.0));
        for (auto far : {FarField::absorb, FarField::clamp}) {
            GeneratorOptions o;
            o.far_field = far;
            check_sub_markovian(build_generator(sys, Grid({Axis{-3.0, 1.0, 80}}),
                                                SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {1.0}}),
                                                Region::complement, o));
        }
    }
    const auto sys2 = SystemSpec::constant({0.3, -0.2}, 0.4, StableParams::symmetric_axes(1.5, 2, 1.0), SubordinatorParams(0.7));
    const auto g2 = build_generator(sys2, Grid({Axis{0.0, 1.0, 12}, Axis{0.0, 1.0, 12}}),
                                    SafeSet::from_spec({BarrierSpec::Kind::box_below, {1.0, 1.0}}), Region::safe_interior);
    CHECK(g2.size() == 144);
    check_sub_markovian(g2);
}

TEST_CASE("clamp far field keeps mass that absorb drops") {
    const auto sys = SystemSpec::constant({0.0}, 0.5, StableParams::one_dimensional(1.2, 0.5, 0.5), SubordinatorParams(1.0));
    const Grid grid({Axis{-2.0, 1.0, 60}});
    const auto safe = SafeSet::from_spec({BarrierSpec::Kind::half_line_below, {1.0}});
    GeneratorOptions clamp;
    clamp.far_field = FarField::clamp;
    const auto ga = build_generator(sys, grid, safe, Region::safe_interior);
    const auto gc = build_generator(sys, grid, safe, Region::safe_interior, clamp);
    CHECK(gc.absorption()[0] < ga.absorption()[0]);
    for (Eigen::Index i = 0; i < 60; ++i) CHECK(gc.absorption()[i] <= ga.absorption()[i]);
    check_sub_markovian(gc);
}

TEST_CASE("region and spectral measure validation") {
    const auto sys = SystemSpec::constant({0.0}, 0.5, StableParams::one_dimensional(1.5, 0.5, 0.5), SubordinatorParams(1.0));
    CHECK_THROWS_AS(build_generator(sys, Grid({Axis{0.0, 1.0, 10}}),
                                    SafeSet::from_spec({BarrierSpec::Kind::half_line_above, {5.0}}), Region::safe_interior),
                    DomainError);
    const StableParams diag(1.5, {{{std::sqrt(0.5), std::sqrt(0.5)}, 0.5}, {{-std::sqrt(0.5), -std::sqrt(0.5)}, 0.5}});
    const auto sys2 = SystemSpec::constant({0.0, 0.0}, 0.5, diag, SubordinatorParams(1.0));
    CHECK_THROWS_AS(build_generator(sys2, Grid({Axis{0.0, 1.0, 4}, Axis{0.0, 1.0, 4}}),
                                    SafeSet::from_spec({BarrierSpec::Kind::box_below, {1.0, 1.0}}), Region::safe_interior),
                    DomainError);
}

TEST_CASE("discrete symbol tracks the characteristic exponent") {
    const double sigma = 0.7, f = 0.3;
    const Grid grid({Axis{0.0, 2.0, 1024}});
    GeneratorOptions periodic;
    periodic.periodic = true;
    for (double alpha : {0.7, 1.0, 1.5, 2.0}) {
        for (double skew : {-1.0, 0.0, 1.0}) {
            const auto st = StableParams::one_dimensional(alpha, 0.5 * (1 + skew), 0.5 * (1 - skew));
            const auto sys = SystemSpec::constant({f}, sigma, st, SubordinatorParams(1.0));
            const auto g = build_generator(sys, grid, everywhere(), Region::safe_interior, periodic);
            for (double xi : {std::numbers::pi, 2 * std::numbers::pi}) {
                const auto got = symbol_check(g, xi);
                const auto expected = std::complex<double>(0.0, xi * f) - std::pow(sigma, alpha) * characteristic_exponent(st, xi);
                CAPTURE(alpha);
                CAPTURE(skew);
                CAPTURE(xi);
                CHECK(std::abs(got - expected) <= 0.05 * std::abs(expected));
            }
        }
    }
}

}
