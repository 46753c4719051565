#include "fracrisk/config.hpp"

#include <algorithm>
#include <fstream>

#include "fracrisk/errors.hpp"
#include "fracrisk/json_io.hpp"

namespace fracrisk {

namespace {

DriftSpec parse_drift(const json& j, int dim) {
    DriftSpec d;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        d.label = name;
        if (name == "builtin:fig1" || name == "builtin:fig2") {
            if (dim != 1) throw ConfigError("system.drift " + name + " is one-dimensional");
            d.kind = DriftSpec::Kind::constant;
            d.value = {name == "builtin:fig1" ? 0.8 : 0.3};
        } else if (name == "builtin:ood") {
            if (dim != 2) throw ConfigError("system.drift builtin:ood is two-dimensional");
            d.kind = DriftSpec::Kind::ood;
            d.coeffs = ood_drift();
        } else {
            throw ConfigError("unknown drift '" + name + "'; use builtin:fig1, builtin:fig2, builtin:ood or an object");
        }
        return d;
    }
    if (!j.is_object()) throw ConfigError("system.drift must be a string or an object");
    if (j.contains("builtin")) {
        require_keys(j, {"builtin", "value"}, "system.drift");
        if (j.at("builtin") != "constant") throw ConfigError("system.drift.builtin must be \"constant\" in object form");
        d.kind = DriftSpec::Kind::constant;
        d.value = get_numbers(j, "value", "system.drift");
        if (static_cast<int>(d.value.size()) != dim) throw ConfigError("system.drift.value needs one entry per dimension");
        d.label = "builtin:constant";
        return d;
    }
    if (j.contains("family")) {
        require_keys(j, {"family"}, "system.drift");
        if (dim != 2) throw ConfigError("family drift is two-dimensional");
        json c = j.at("family");
        if (!c.is_object()) throw ConfigError("system.drift.family must be an object");
        if (!c.contains("kind")) c["kind"] = "family";
        d.kind = DriftSpec::Kind::family;
        d.coeffs = drift_from_json(c);
        d.label = "family";
        return d;
    }
    throw ConfigError("system.drift object needs 'builtin' or 'family'");
}

std::vector<SpectralAtom> parse_atoms(const json& j, int dim) {
    if (!j.is_array() || j.empty()) throw ConfigError("system.atoms must be a nonempty array");
    std::vector<SpectralAtom> atoms;
    for (const auto& a : j) {
        require_keys(a, {"direction", "weight"}, "system.atoms[]");
        SpectralAtom atom;
        atom.direction = get_numbers(a, "direction", "system.atoms[]");
        atom.weight = get_number(a, "weight", "system.atoms[]");
        if (static_cast<int>(atom.direction.size()) != dim) throw ConfigError("atom direction has the wrong dimension");
        atoms.push_back(std::move(atom));
    }
    return atoms;
}

std::vector<SpectralAtom> default_atoms(int dim) {
    if (dim == 1) return {{{1.0}, 0.5}, {{-1.0}, 0.5}};
    return {{{1.0, 0.0}, 0.25}, {{-1.0, 0.0}, 0.25}, {{0.0, 1.0}, 0.25}, {{0.0, -1.0}, 0.25}};
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return {};
    if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
    return obj.at(key).get<std::string>();
}

}  // namespace

RunConfig parse_config(const json& doc) {
    require_keys(doc, {"system", "safe_set", "kind", "grid", "time", "mc", "solver", "compare", "dataset", "ood", "output"},
                 "config");
    RunConfig cfg;
    cfg.raw = doc;

    if (!doc.contains("system")) throw ConfigError("config.system is required");
    const json& sys = doc.at("system");
    require_keys(sys, {"dim", "alpha", "beta", "atoms", "sigma", "drift"}, "system");
    cfg.dim = static_cast<int>(get_count(sys, "dim", "system", 1));
    if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("system.dim must be 1 or 2");
    cfg.alpha = get_number(sys, "alpha", "system");
    cfg.beta = get_number(sys, "beta", "system", 1.0);
    cfg.sigma = get_number(sys, "sigma", "system");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 2.0)) throw ConfigError("system.alpha must lie in (0, 2]");
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw ConfigError("system.beta must lie in (0, 1]");
    if (!(cfg.sigma >= 0.0)) throw ConfigError("system.sigma must be nonnegative");
    cfg.atoms = sys.contains("atoms") ? parse_atoms(sys.at("atoms"), cfg.dim) : default_atoms(cfg.dim);
    if (!sys.contains("drift")) throw ConfigError("system.drift is required");
    cfg.drift = parse_drift(sys.at("drift"), cfg.dim);
    try {
        (void)cfg.stable();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }

    if (!doc.contains("safe_set")) throw ConfigError("config.safe_set is required");
    cfg.safe = barrier_from_json(doc.at("safe_set"));
    const bool half_line = cfg.safe.kind != BarrierSpec::Kind::box_below;
    if ((half_line && cfg.dim != 1) || (!half_line && static_cast<int>(cfg.safe.bound.size()) != cfg.dim)) {
        throw ConfigError("safe_set does not match system.dim");
    }

    if (doc.contains("kind")) {
        const auto kind = doc.at("kind").is_string() ? doc.at("kind").get<std::string>() : "";
        if (kind == "safety") {
            cfg.kind = RiskKind::safety;
        } else if (kind == "recovery") {
            cfg.kind = RiskKind::recovery;
        } else {
            throw ConfigError("kind must be \"safety\" or \"recovery\"");
        }
    }

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        cfg.grid = grid_from_json(g);
        if (cfg.grid->dim() != cfg.dim) throw ConfigError("grid dimension does not match system.dim");
        if (g.contains("far_field")) {
            if (!g.at("far_field").is_string()) throw ConfigError("grid.far_field must be a string");
            cfg.far_field = far_field_from_string(g.at("far_field").get<std::string>());
        }
    }

    if (doc.contains("time")) {
        const json& t = doc.at("time");
        require_keys(t, {"horizons"}, "time");
        if (t.contains("horizons")) cfg.horizons = get_numbers(t, "horizons", "time");
        for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
            if (!(cfg.horizons[i] >= 0.0)) throw ConfigError("time.horizons must be nonnegative");
            if (i > 0 && cfg.horizons[i] < cfg.horizons[i - 1]) throw ConfigError("time.horizons must be ascending");
        }
    }

    if (doc.contains("mc")) {
        const json& m = doc.at("mc");
        const std::string w = "mc";
        require_keys(m, {"n_paths", "ds", "seed", "points", "clock", "bridge", "clamp_lower"}, w);
        cfg.mc_paths = get_count(m, "n_paths", w, cfg.mc_paths);
        if (cfg.mc_paths == 0) throw ConfigError("mc.n_paths must be at least 1");
        cfg.mc_ds = get_number(m, "ds", w, cfg.mc_ds);
        if (!(cfg.mc_ds > 0.0)) throw ConfigError("mc.ds must be positive");
        if (m.contains("seed")) {
            if (!m.at("seed").is_number_unsigned()) throw ConfigError("mc.seed must be a nonnegative integer");
            cfg.seed = m.at("seed").get<std::uint64_t>();
        }
        if (m.contains("points")) {
            if (!m.at("points").is_array()) throw ConfigError("mc.points must be an array of states");
            for (const auto& p : m.at("points")) {
                std::vector<double> x;
                if (p.is_number()) {
                    x = {p.get<double>()};
                } else if (p.is_array() && std::all_of(p.begin(), p.end(), [](const json& v) { return v.is_number(); })) {
                    x = p.get<std::vector<double>>();
                } else {
                    throw ConfigError("mc.points entries must be numbers or arrays of numbers");
                }
                if (static_cast<int>(x.size()) != cfg.dim) throw ConfigError("mc.points entry has the wrong dimension");
                cfg.mc_points.push_back(std::move(x));
            }
        }
        const auto clock = optional_string(m, "clock", w);
        if (clock == "path") {
            cfg.clock = ClockMode::path;
        } else if (!clock.empty() && clock != "independent") {
            throw ConfigError("mc.clock must be \"independent\" or \"path\"");
        }
        if (m.contains("bridge")) {
            if (!m.at("bridge").is_boolean()) throw ConfigError("mc.bridge must be a boolean");
            cfg.gaussian_bridge = m.at("bridge").get<bool>();
        }
        if (m.contains("clamp_lower")) {
            cfg.mc_clamp_lower = get_numbers(m, "clamp_lower", w);
            if (static_cast<int>(cfg.mc_clamp_lower.size()) != cfg.dim) throw ConfigError("mc.clamp_lower has the wrong dimension");
        }
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        const std::string w = "solver";
        require_keys(s, {"dt", "t_max", "startup_intervals", "startup_points", "tolerance"}, w);
        cfg.solver_dt = get_number(s, "dt", w, cfg.solver_dt);
        if (!(cfg.solver_dt > 0.0)) throw ConfigError("solver.dt must be positive");
        if (s.contains("t_max")) {
            cfg.solver_t_max = get_number(s, "t_max", w);
            if (!(*cfg.solver_t_max >= 0.0)) throw ConfigError("solver.t_max must be nonnegative");
        }
        cfg.solver.startup_intervals = get_count(s, "startup_intervals", w, cfg.solver.startup_intervals);
        cfg.solver.startup_points = get_count(s, "startup_points", w, cfg.solver.startup_points);
        cfg.solver.iterative_tolerance = get_number(s, "tolerance", w, cfg.solver.iterative_tolerance);
        if (!(cfg.solver.iterative_tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
    }

    if (doc.contains("compare")) {
        const json& c = doc.at("compare");
        require_keys(c, {"tolerance", "ci_multiplier"}, "compare");
        cfg.compare_tolerance = get_number(c, "tolerance", "compare", cfg.compare_tolerance);
        cfg.compare_ci_multiplier = get_number(c, "ci_multiplier", "compare", cfg.compare_ci_multiplier);
        if (!(cfg.compare_tolerance >= 0.0) || !(cfg.compare_ci_multiplier >= 0.0)) {
            throw ConfigError("compare tolerances must be nonnegative");
        }
    }

    if (doc.contains("dataset")) {
        const json& d = doc.at("dataset");
        require_keys(d, {"n_samples", "train_fraction", "family"}, "dataset");
        cfg.dataset_samples = get_count(d, "n_samples", "dataset", cfg.dataset_samples);
        if (cfg.dataset_samples == 0) throw ConfigError("dataset.n_samples must be at least 1");
        cfg.train_fraction = get_number(d, "train_fraction", "dataset", cfg.train_fraction);
        if (!(cfg.train_fraction >= 0.0 && cfg.train_fraction <= 1.0)) throw ConfigError("dataset.train_fraction must be in [0, 1]");
        if (d.contains("family")) cfg.family = family_from_json(d.at("family"));
    }

    if (doc.contains("ood")) {
        const json& o = doc.at("ood");
        require_keys(o, {"points", "n_paths", "tolerance", "cells"}, "ood");
        cfg.ood_points = get_count(o, "points", "ood", cfg.ood_points);
        cfg.ood_paths = get_count(o, "n_paths", "ood", cfg.ood_paths);
        cfg.ood_tolerance = get_number(o, "tolerance", "ood", cfg.ood_tolerance);
        if (o.contains("cells")) cfg.ood_cells = get_count(o, "cells", "ood", 0);
        if (cfg.ood_points == 0 || cfg.ood_paths == 0 || (cfg.ood_cells && *cfg.ood_cells == 0)) {
            throw ConfigError("ood counts must be positive");
        }
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        require_keys(o, {"csv", "pde_csv", "frsk"}, "output");
        cfg.out_csv = optional_string(o, "csv", "output");
        cfg.out_pde_csv = optional_string(o, "pde_csv", "output");
        cfg.out_frsk = optional_string(o, "frsk", "output");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

StableParams RunConfig::stable() const { return StableParams(alpha, atoms); }

SystemSpec RunConfig::system() const {
    DriftFn f;
    if (drift.kind == DriftSpec::Kind::constant) {
        f = [v = drift.value](std::span<const double>, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); };
    } else {
        f = drift_function(drift.coeffs);
    }
    return SystemSpec{dim, std::move(f), [s = sigma](std::span<const double>) { return s; }, stable(), subordinator()};
}

std::vector<double> RunConfig::time_grid() const {
    double t_max = 0.0;
    if (solver_t_max) {
        t_max = *solver_t_max;
    } else if (!horizons.empty()) {
        t_max = horizons.back();
    }
    return uniform_time_grid(t_max, solver_dt);
}

McConfig RunConfig::mc_config(std::size_t workers) const {
    McConfig m;
    m.ds = mc_ds;
    m.workers = workers;
    m.gaussian_bridge = gaussian_bridge;
    m.clock = clock;
    m.clamp_lower = mc_clamp_lower;
    return m;
}

GeneratorOptions RunConfig::generator_options() const {
    GeneratorOptions g;
    g.far_field = far_field;
    return g;
}

DatasetSpec dataset_spec(const RunConfig& cfg, std::size_t workers) {
    if (cfg.dim != 2) throw ConfigError("dataset generation needs system.dim = 2");
    if (!cfg.grid) throw ConfigError("dataset generation needs a grid section");
    DatasetSpec spec;
    spec.family = cfg.family;
    spec.n_samples = cfg.dataset_samples;
    spec.grid = *cfg.grid;
    spec.times = cfg.time_grid();
    spec.stable = cfg.stable();
    spec.subordinator = cfg.subordinator();
    spec.sigma = cfg.sigma;
    spec.safe = cfg.safe;
    spec.far_field = cfg.far_field;
    spec.seed = cfg.seed;
    spec.solver = cfg.solver;
    spec.train_fraction = cfg.train_fraction;
    spec.workers = workers;
    return spec;
}

RngStream component_stream(std::uint64_t seed, const char* component) {
    return RngStream(seed, stream_id_for(component));
}

}  // namespace fracrisk
