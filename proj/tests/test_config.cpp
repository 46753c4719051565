#include <doctest.h>

#include "fracrisk/config.hpp"
#include "fracrisk/errors.hpp"
#include "test_util.hpp"

using namespace fracrisk;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
      "system": {"dim": 1, "alpha": 1.5, "beta": 0.7,
                 "atoms": [{"direction": [1.0], "weight": 0.5}, {"direction": [-1.0], "weight": 0.5}],
                 "sigma": 0.3, "drift": "builtin:fig2"},
      "safe_set": {"type": "half_line_above", "threshold": 1.0},
      "grid": {"lower": [-3.0], "upper": [1.0], "cells": [40]},
      "time": {"horizons": [0.5]}
    })");
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("bundled configs parse") {
    const auto f1 = load_config(testutil::source_path("configs/fig1.json"));
    CHECK(f1.dim == 1);
    CHECK(f1.alpha == 1.0);
    CHECK(f1.kind == RiskKind::recovery);
    CHECK(f1.far_field == FarField::clamp);
    CHECK(f1.mc_points.size() == 14);
    CHECK(f1.drift.value == std::vector<double>{0.8});
    const auto f2 = load_config(testutil::source_path("configs/fig2.json"));
    CHECK(f2.alpha == 2.0);
    CHECK(f2.beta == 0.4);
    CHECK(f2.drift.value == std::vector<double>{0.3});
    const auto d = load_config(testutil::source_path("configs/dataset-2d.json"));
    CHECK(d.dim == 2);
    CHECK(d.drift.kind == DriftSpec::Kind::ood);
    const auto spec = dataset_spec(d, 1);
    CHECK(spec.grid.size() == 33 * 33);
    CHECK(spec.n_samples == 20);
    CHECK(spec.times.back() == doctest::Approx(1.0));
}

TEST_CASE("defaults and derived objects") {
    const auto cfg = parse_config(minimal());
    CHECK(cfg.kind == RiskKind::safety);
    CHECK(cfg.far_field == FarField::absorb);
    CHECK(cfg.time_grid().back() == doctest::Approx(0.5));
    CHECK(cfg.stable().alpha() == 1.5);
    std::vector<double> out(1);
    const double x = 0.0;
    cfg.system().drift(std::span<const double>(&x, 1), out);
    CHECK(out[0] == 0.3);
}

TEST_CASE("unknown keys and bad values are rejected") {
    auto a = minimal();
    a["system"]["alfa"] = 1.0;
    CHECK_THROWS_AS(parse_config(a), ConfigError);
    auto b = minimal();
    b["system"]["alpha"] = 2.5;
    CHECK_THROWS_AS(parse_config(b), ConfigError);
    auto c = minimal();
    c["system"]["beta"] = 0.0;
    CHECK_THROWS_AS(parse_config(c), ConfigError);
    auto d = minimal();
    d["time"]["horizons"] = {1.0, 0.5};
    CHECK_THROWS_AS(parse_config(d), ConfigError);
    auto e = minimal();
    e["system"]["drift"] = "builtin:ood";
    CHECK_THROWS_AS(parse_config(e), ConfigError);
    auto f = minimal();
    f["kind"] = "ruin";
    CHECK_THROWS_AS(parse_config(f), ConfigError);
    auto g = minimal();
    g["extra"] = json::object();
    CHECK_THROWS_AS(parse_config(g), ConfigError);
    auto h = minimal();
    h.erase("system");
    CHECK_THROWS_AS(parse_config(h), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("constant drift object") {
    auto j = minimal();
    j["system"]["drift"] = {{"builtin", "constant"}, {"value", {-0.25}}};
    const auto cfg = parse_config(j);
    CHECK(cfg.drift.value == std::vector<double>{-0.25});
    j["system"]["drift"]["value"] = {1.0, 2.0};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

}
