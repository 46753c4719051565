#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "fracrisk/dataset.hpp"
#include "fracrisk/grid.hpp"
#include "fracrisk/sde.hpp"
#include "fracrisk/solver.hpp"
#include "fracrisk/stable.hpp"

namespace fracrisk {

using nlohmann::json;

/// Throws ConfigError naming `where` if `obj` is not an object or holds a key
/// outside `allowed`.
void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where);

/// Typed field access with ConfigError on a missing or mistyped value.
double get_number(const json& obj, const char* key, const std::string& where);
double get_number(const json& obj, const char* key, const std::string& where, double fallback);
std::size_t get_count(const json& obj, const char* key, const std::string& where, std::size_t fallback);
std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where);

json stable_to_json(const StableParams& params);
json barrier_to_json(const BarrierSpec& spec);
BarrierSpec barrier_from_json(const json& j);
json grid_to_json(const Grid& grid);
Grid grid_from_json(const json& j);
json family_to_json(const FamilyParams& family);
FamilyParams family_from_json(const json& j);
json drift_to_json(const DriftCoeffs& coeffs);
DriftCoeffs drift_from_json(const json& j);
json solver_options_to_json(const SolverOptions& options);

const char* to_string(FarField far_field) noexcept;
FarField far_field_from_string(const std::string& name);

}  // namespace fracrisk
