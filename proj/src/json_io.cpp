#include "fracrisk/json_io.hpp"

#include <algorithm>
#include <cstring>

#include "fracrisk/errors.hpp"

namespace fracrisk {

namespace {

json interval_to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from_json(const json& obj, const char* key, const std::string& where, Interval fallback) {
    if (!obj.contains(key)) return fallback;
    const auto v = get_numbers(obj, key, where);
    if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError(where + "." + key + " must be [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

json component_to_json(const DriftComponent& c) {
    return {{"c0", c.c0},         {"linear", c.linear}, {"square", c.square}, {"cross", c.cross},
            {"power", c.power},   {"sine", c.sine},     {"cosine", c.cosine}};
}

std::array<double, 2> pair_from(const json& j, const char* key, const std::string& where) {
    const auto v = get_numbers(j, key, where);
    if (v.size() != 2) throw ConfigError(where + "." + key + " must have two entries");
    return {v[0], v[1]};
}

DriftComponent component_from_json(const json& j, const std::string& where, std::size_t modes) {
    require_keys(j, {"c0", "linear", "square", "cross", "power", "sine", "cosine"}, where);
    DriftComponent c;
    c.c0 = get_number(j, "c0", where);
    c.linear = pair_from(j, "linear", where);
    c.square = pair_from(j, "square", where);
    c.cross = get_number(j, "cross", where);
    c.power = pair_from(j, "power", where);
    c.sine = get_numbers(j, "sine", where);
    c.cosine = get_numbers(j, "cosine", where);
    if (c.sine.size() != modes || c.cosine.size() != modes) {
        throw ConfigError(where + ": sine/cosine need k1 * k2 entries");
    }
    return c;
}

}  // namespace

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

double get_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

std::size_t get_count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where + "." + key + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
    const json& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

json stable_to_json(const StableParams& params) {
    json atoms = json::array();
    for (const auto& a : params.atoms()) atoms.push_back({{"direction", a.direction}, {"weight", a.weight}});
    return {{"alpha", params.alpha()}, {"atoms", atoms}};
}

json barrier_to_json(const BarrierSpec& spec) {
    switch (spec.kind) {
        case BarrierSpec::Kind::half_line_above:
            return {{"type", "half_line_above"}, {"threshold", spec.bound.at(0)}};
        case BarrierSpec::Kind::half_line_below:
            return {{"type", "half_line_below"}, {"threshold", spec.bound.at(0)}};
        case BarrierSpec::Kind::box_below:
            return {{"type", "box_below"}, {"upper", spec.bound}};
    }
    return {};
}

BarrierSpec barrier_from_json(const json& j) {
    const std::string where = "safe_set";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        throw ConfigError("safe_set.type is required");
    }
    const auto type = j.at("type").get<std::string>();
    BarrierSpec spec;
    if (type == "half_line_above" || type == "half_line_below") {
        require_keys(j, {"type", "threshold"}, where);
        spec.kind = type == "half_line_above" ? BarrierSpec::Kind::half_line_above : BarrierSpec::Kind::half_line_below;
        spec.bound = {get_number(j, "threshold", where)};
    } else if (type == "box_below") {
        require_keys(j, {"type", "upper"}, where);
        spec.kind = BarrierSpec::Kind::box_below;
        spec.bound = get_numbers(j, "upper", where);
        if (spec.bound.empty() || spec.bound.size() > 2) throw ConfigError("safe_set.upper needs 1 or 2 entries");
    } else {
        throw ConfigError("safe_set.type must be half_line_above, half_line_below or box_below");
    }
    return spec;
}

json grid_to_json(const Grid& grid) {
    json lower = json::array(), upper = json::array(), cells = json::array();
    for (const auto& a : grid.axes()) {
        lower.push_back(a.lower);
        upper.push_back(a.upper);
        cells.push_back(a.cells);
    }
    return {{"lower", lower}, {"upper", upper}, {"cells", cells}};
}

Grid grid_from_json(const json& j) {
    const std::string where = "grid";
    require_keys(j, {"lower", "upper", "cells", "far_field"}, where);
    const auto lower = get_numbers(j, "lower", where);
    const auto upper = get_numbers(j, "upper", where);
    if (!j.contains("cells") || !j.at("cells").is_array()) throw ConfigError("grid.cells must be an array");
    std::vector<std::size_t> cells;
    for (const auto& c : j.at("cells")) {
        if (!c.is_number_unsigned() || c.get<std::size_t>() == 0) throw ConfigError("grid.cells must be positive integers");
        cells.push_back(c.get<std::size_t>());
    }
    if (lower.size() != upper.size() || lower.size() != cells.size() || lower.empty() || lower.size() > 2) {
        throw ConfigError("grid.lower, grid.upper and grid.cells need matching length 1 or 2");
    }
    std::vector<Axis> axes;
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (!(upper[d] > lower[d])) throw ConfigError("grid.upper must exceed grid.lower");
        axes.push_back(Axis{lower[d], upper[d], cells[d]});
    }
    return Grid(std::move(axes));
}

json family_to_json(const FamilyParams& f) {
    return {{"k1", f.k1},
            {"k2", f.k2},
            {"decay", f.decay},
            {"s1", f.s1},
            {"s2", f.s2},
            {"bounds",
             {{"c0", interval_to_json(f.c0)},
              {"linear", interval_to_json(f.linear)},
              {"square", interval_to_json(f.square)},
              {"cross", interval_to_json(f.cross)},
              {"power", interval_to_json(f.power)},
              {"sine", interval_to_json(f.sine)},
              {"cosine", interval_to_json(f.cosine)}}}};
}

FamilyParams family_from_json(const json& j) {
    const std::string where = "family";
    require_keys(j, {"k1", "k2", "decay", "s1", "s2", "bounds"}, where);
    FamilyParams f;
    f.k1 = static_cast<int>(get_count(j, "k1", where, static_cast<std::size_t>(f.k1)));
    f.k2 = static_cast<int>(get_count(j, "k2", where, static_cast<std::size_t>(f.k2)));
    f.decay = get_number(j, "decay", where, f.decay);
    f.s1 = get_number(j, "s1", where, f.s1);
    f.s2 = get_number(j, "s2", where, f.s2);
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        const std::string bw = where + ".bounds";
        require_keys(b, {"c0", "linear", "square", "cross", "power", "sine", "cosine"}, bw);
        f.c0 = interval_from_json(b, "c0", bw, f.c0);
        f.linear = interval_from_json(b, "linear", bw, f.linear);
        f.square = interval_from_json(b, "square", bw, f.square);
        f.cross = interval_from_json(b, "cross", bw, f.cross);
        f.power = interval_from_json(b, "power", bw, f.power);
        f.sine = interval_from_json(b, "sine", bw, f.sine);
        f.cosine = interval_from_json(b, "cosine", bw, f.cosine);
    }
    try {
        f.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("family: ") + e.what());
    }
    return f;
}

json drift_to_json(const DriftCoeffs& c) {
    if (c.kind == DriftCoeffs::Kind::ood) return {{"kind", "ood"}};
    return {{"kind", "family"}, {"k1", c.k1}, {"k2", c.k2}, {"decay", c.decay}, {"s1", c.s1}, {"s2", c.s2},
            {"f1", component_to_json(c.f[0])}, {"f2", component_to_json(c.f[1])}};
}

DriftCoeffs drift_from_json(const json& j) {
    const std::string where = "coeffs";
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("coeffs.kind is required");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ood") {
        require_keys(j, {"kind"}, where);
        return ood_drift();
    }
    if (kind != "family") throw ConfigError("coeffs.kind must be family or ood");
    require_keys(j, {"kind", "k1", "k2", "decay", "s1", "s2", "f1", "f2"}, where);
    DriftCoeffs c;
    c.kind = DriftCoeffs::Kind::family;
    c.k1 = static_cast<int>(get_count(j, "k1", where, 0));
    c.k2 = static_cast<int>(get_count(j, "k2", where, 0));
    c.decay = get_number(j, "decay", where);
    c.s1 = get_number(j, "s1", where);
    c.s2 = get_number(j, "s2", where);
    const auto modes = static_cast<std::size_t>(c.k1) * static_cast<std::size_t>(c.k2);
    if (!j.contains("f1") || !j.contains("f2")) throw ConfigError("coeffs needs f1 and f2");
    c.f[0] = component_from_json(j.at("f1"), where + ".f1", modes);
    c.f[1] = component_from_json(j.at("f2"), where + ".f2", modes);
    return c;
}

json solver_options_to_json(const SolverOptions& o) {
    return {{"startup_intervals", o.startup_intervals},
            {"startup_points", o.startup_points},
            {"iterative_tolerance", o.iterative_tolerance},
            {"dense_limit", o.dense_limit},
            {"direct_limit", o.direct_limit}};
}

const char* to_string(FarField far_field) noexcept { return far_field == FarField::absorb ? "absorb" : "clamp"; }

FarField far_field_from_string(const std::string& name) {
    if (name == "absorb") return FarField::absorb;
    if (name == "clamp") return FarField::clamp;
    throw ConfigError("far_field must be absorb or clamp");
}

}  // namespace fracrisk
