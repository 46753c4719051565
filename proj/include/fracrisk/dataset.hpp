#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracrisk/generator.hpp"
#include "fracrisk/rng.hpp"
#include "fracrisk/sde.hpp"
#include "fracrisk/solver.hpp"

namespace fracrisk {

struct Interval {
    double lo = -1.0;
    double hi = 1.0;
};

/// Randomized 2D drift family: per component
///   c0 + c1.x + c2.x^2 + c12 x1 x2 + c3.|x|^1.5
///   + sum_{k1,k2} (a sin(2 pi (s1 k1 x1 + s2 k2 x2)) + b cos(...)) / (k1^2 + k2^2)^{d/2}.
struct FamilyParams {
    int k1 = 3;
    int k2 = 3;
    double decay = 2.0;
    double s1 = 1.0;
    double s2 = 1.0;
    Interval c0{};
    Interval linear{};
    Interval square{};
    Interval cross{};
    Interval power{};
    Interval sine{-3.0, 3.0};
    Interval cosine{-3.0, 3.0};

    void validate() const;
};

struct DriftComponent {
    double c0 = 0.0;
    std::array<double, 2> linear{};
    std::array<double, 2> square{};
    double cross = 0.0;
    std::array<double, 2> power{};
    std::vector<double> sine;    // k1-major, K1 * K2 entries
    std::vector<double> cosine;
};

struct DriftCoeffs {
    enum class Kind { family, ood };
    Kind kind = Kind::family;
    int k1 = 0;
    int k2 = 0;
    double decay = 2.0;
    double s1 = 1.0;
    double s2 = 1.0;
    std::array<DriftComponent, 2> f{};

    /// All-zero family member with the given mode counts.
    static DriftCoeffs zero(int k1, int k2);
};

DriftCoeffs sample_drift(const FamilyParams& family, RngStream& rng);
std::array<double, 2> eval_drift(const DriftCoeffs& coeffs, std::span<const double> x);
/// f1 = 1.32 x1 + 1.32 x2 + 1,
/// f2 = 10 |x1|^1.6 - 5 |x2|^1.6 + 2 cos(3 pi x2) + 1 + 20 sin(0.96 x1 + 0.36 x2 + pi).
DriftCoeffs ood_drift();
DriftFn drift_function(DriftCoeffs coeffs);

struct DatasetSpec {
    FamilyParams family;
    std::size_t n_samples = 1;
    Grid grid{{Axis{0.0, 1.0, 33}, Axis{0.0, 1.0, 33}}};
    std::vector<double> times = uniform_time_grid(1.0, 1.0 / 32.0);
    StableParams stable = StableParams::symmetric_axes(1.5, 2, 1.0);
    SubordinatorParams subordinator{0.7};
    double sigma = 0.2;
    BarrierSpec safe{BarrierSpec::Kind::box_below, {1.0, 1.0}};
    FarField far_field = FarField::clamp;
    std::uint64_t seed = 0;
    SolverOptions solver;
    double train_fraction = 0.8;
    std::size_t workers = 1;
};

struct DatasetSummary {
    nlohmann::json manifest;
    std::string digest;  // hex SHA-256 of the records section
    std::size_t failed = 0;
};

/// Solves one safety field per sampled drift and writes an FRSK1 file:
/// "FRSK1\n", a one-line JSON manifest, then per sample a JSON line and
/// (if solved) a little-endian float32 payload laid out [T][x1][x2].
/// Offsets in the manifest are relative to the first record byte.
DatasetSummary generate_dataset(const DatasetSpec& spec, const std::string& out_path);

struct DatasetRecord {
    std::size_t index = 0;
    bool ok = false;
    nlohmann::json header;
    DriftCoeffs coeffs;
    std::vector<float> values;  // [T][cell]
};

struct Dataset {
    nlohmann::json manifest;
    std::string digest;
    std::vector<DatasetRecord> records;

    /// Field of a solved record as a RiskField (kind safety).
    RiskField field(std::size_t i) const;
};

/// Parses an FRSK1 file, checks the digest and offsets, and re-validates
/// every stored field. Throws InvariantViolation or DomainError.
Dataset read_dataset(const std::string& path);

std::string sha256_hex(std::span<const unsigned char> bytes);

}  // namespace fracrisk
