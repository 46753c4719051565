#include "fracrisk/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "fracrisk/errors.hpp"
#include "fracrisk/json_io.hpp"

namespace fracrisk {

namespace {

static_assert(std::endian::native == std::endian::little, "FRSK1 payloads are written in native little-endian order");

constexpr const char* kMagic = "FRSK1\n";

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("SHA-256 initialization failed");
        }
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw std::runtime_error("SHA-256 finalization failed");
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 15]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

double draw(const Interval& i, RngStream& rng) { return i.lo == i.hi ? i.lo : i.lo + (i.hi - i.lo) * rng.uniform(); }

double eval_component(const DriftCoeffs& c, const DriftComponent& f, double x1, double x2) {
    double v = f.c0 + f.linear[0] * x1 + f.linear[1] * x2 + f.square[0] * x1 * x1 + f.square[1] * x2 * x2 +
               f.cross * x1 * x2 + f.power[0] * std::pow(std::abs(x1), 1.5) + f.power[1] * std::pow(std::abs(x2), 1.5);
    for (int a = 1; a <= c.k1; ++a) {
        for (int b = 1; b <= c.k2; ++b) {
            const auto m = static_cast<std::size_t>((a - 1) * c.k2 + (b - 1));
            if (f.sine[m] == 0.0 && f.cosine[m] == 0.0) continue;
            const double weight = std::pow(static_cast<double>(a * a + b * b), -c.decay / 2.0);
            const double arg = 2.0 * std::numbers::pi * (c.s1 * a * x1 + c.s2 * b * x2);
            v += weight * (f.sine[m] * std::sin(arg) + f.cosine[m] * std::cos(arg));
        }
    }
    return v;
}

struct SampleResult {
    bool ok = false;
    std::string diagnostics;
    std::vector<float> payload;
    FieldStats stats;
};

SampleResult solve_sample(const DatasetSpec& spec, const DriftCoeffs& coeffs) {
    SampleResult r;
    try {
        const SystemSpec sys{2, drift_function(coeffs), [s = spec.sigma](std::span<const double>) { return s; },
                             spec.stable, spec.subordinator};
        const SafeSet safe = SafeSet::from_spec(spec.safe);
        GeneratorOptions options;
        options.far_field = spec.far_field;
        const GeneratorMatrix gen = build_generator(sys, spec.grid, safe, Region::safe_interior, options);
        const RiskField field = solve_safety(gen, spec.subordinator, spec.times, spec.solver);
        r.stats = field_stats(field);
        r.payload.assign(field.values.begin(), field.values.end());
        r.ok = true;
    } catch (const std::exception& e) {
        r.diagnostics = e.what();
        r.payload.clear();
    }
    return r;
}

std::vector<char> in_region_mask(const Grid& grid, const BarrierSpec& spec) {
    const SafeSet safe = SafeSet::from_spec(spec);
    std::vector<char> mask(grid.size(), 0);
    for (std::size_t c = 0; c < grid.size(); ++c) {
        const auto x = grid.center(c);
        mask[c] = safe.barrier(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim()))) > 0.0;
    }
    return mask;
}

}  // namespace

void FamilyParams::validate() const {
    if (k1 < 1 || k2 < 1) throw DomainError("family needs k1, k2 >= 1");
    if (!(decay > 0.0)) throw DomainError("family decay must be positive");
    if (!std::isfinite(s1) || !std::isfinite(s2)) throw DomainError("family frequency scales must be finite");
    for (const Interval* i : {&c0, &linear, &square, &cross, &power, &sine, &cosine}) {
        if (!std::isfinite(i->lo) || !std::isfinite(i->hi) || i->lo > i->hi) {
            throw DomainError("family coefficient bounds must be finite intervals");
        }
    }
}

DriftCoeffs DriftCoeffs::zero(int k1, int k2) {
    DriftCoeffs c;
    c.k1 = k1;
    c.k2 = k2;
    const auto modes = static_cast<std::size_t>(k1) * static_cast<std::size_t>(k2);
    for (auto& f : c.f) {
        f.sine.assign(modes, 0.0);
        f.cosine.assign(modes, 0.0);
    }
    return c;
}

DriftCoeffs sample_drift(const FamilyParams& family, RngStream& rng) {
    family.validate();
    DriftCoeffs c = DriftCoeffs::zero(family.k1, family.k2);
    c.decay = family.decay;
    c.s1 = family.s1;
    c.s2 = family.s2;
    for (auto& f : c.f) {
        f.c0 = draw(family.c0, rng);
        for (double& v : f.linear) v = draw(family.linear, rng);
        for (double& v : f.square) v = draw(family.square, rng);
        f.cross = draw(family.cross, rng);
        for (double& v : f.power) v = draw(family.power, rng);
        for (double& v : f.sine) v = draw(family.sine, rng);
        for (double& v : f.cosine) v = draw(family.cosine, rng);
    }
    return c;
}

std::array<double, 2> eval_drift(const DriftCoeffs& c, std::span<const double> x) {
    if (x.size() != 2) throw DomainError("drift family is two-dimensional");
    const double x1 = x[0];
    const double x2 = x[1];
    if (c.kind == DriftCoeffs::Kind::ood) {
        return {1.32 * x1 + 1.32 * x2 + 1.0,
                10.0 * std::pow(std::abs(x1), 1.6) - 5.0 * std::pow(std::abs(x2), 1.6) +
                    2.0 * std::cos(3.0 * std::numbers::pi * x2) + 1.0 +
                    20.0 * std::sin(0.96 * x1 + 0.36 * x2 + std::numbers::pi)};
    }
    return {eval_component(c, c.f[0], x1, x2), eval_component(c, c.f[1], x1, x2)};
}

DriftCoeffs ood_drift() {
    DriftCoeffs c;
    c.kind = DriftCoeffs::Kind::ood;
    return c;
}

DriftFn drift_function(DriftCoeffs coeffs) {
    return [c = std::move(coeffs)](std::span<const double> x, std::span<double> out) {
        const auto f = eval_drift(c, x);
        out[0] = f[0];
        out[1] = f[1];
    };
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

DatasetSummary generate_dataset(const DatasetSpec& spec, const std::string& out_path) {
    if (spec.n_samples == 0) throw DomainError("dataset needs at least one sample");
    if (spec.grid.dim() != 2 || spec.stable.dim() != 2) throw DomainError("dataset generation is two-dimensional");
    if (!(spec.sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
    if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) throw DomainError("train fraction must be in [0, 1]");
    spec.family.validate();

    const std::size_t n = spec.n_samples;
    std::vector<DriftCoeffs> coeffs;
    coeffs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(spec.seed, mix_stream(stream_id_for("dataset.drift"), i));
        coeffs.push_back(sample_drift(spec.family, rng));
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream split_rng(spec.seed, stream_id_for("dataset.split"));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(split_rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());

    // Workers fill slots; this thread writes them in index order.
    const std::size_t workers = std::max<std::size_t>(1, std::min(spec.workers == 0 ? std::thread::hardware_concurrency() : spec.workers, n));
    const std::size_t window = 4 * workers;
    std::vector<std::optional<SampleResult>> slots(n);
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t next_task = 0;
    std::size_t written = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::unique_lock lock(mutex);
                cv.wait(lock, [&] { return next_task >= n || next_task < written + window; });
                if (next_task >= n) return;
                i = next_task++;
            }
            SampleResult r = solve_sample(spec, coeffs[i]);
            {
                std::lock_guard lock(mutex);
                slots[i] = std::move(r);
            }
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

    const std::string records_path = out_path + ".records.tmp";
    std::ofstream records(records_path, std::ios::binary | std::ios::trunc);
    if (!records) {
        {
            std::lock_guard lock(mutex);
            next_task = n;
        }
        cv.notify_all();
        for (auto& t : pool) t.join();
        throw DomainError("cannot write " + records_path);
    }
    Sha256 sha;
    std::uint64_t offset = 0;
    json samples = json::array();
    std::size_t failed = 0;
    auto emit = [&](const void* data, std::size_t bytes) {
        records.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
        sha.update(data, bytes);
        offset += bytes;
    };
    for (std::size_t i = 0; i < n; ++i) {
        SampleResult r;
        {
            std::unique_lock lock(mutex);
            cv.wait(lock, [&] { return slots[i].has_value(); });
            r = std::move(*slots[i]);
            slots[i].reset();
            ++written;
        }
        cv.notify_all();

        const std::uint64_t payload_bytes = r.payload.size() * sizeof(float);
        json header = {{"index", i}, {"status", r.ok ? "ok" : "failed"}, {"coeffs", drift_to_json(coeffs[i])},
                       {"payload_bytes", payload_bytes}};
        if (r.ok) {
            header["min"] = r.stats.min_value;
            header["max"] = r.stats.max_value;
        } else {
            header["diagnostics"] = r.diagnostics;
            ++failed;
        }
        const std::string line = header.dump() + "\n";
        json entry = {{"index", i}, {"offset", offset}, {"header_bytes", line.size()},
                      {"payload_offset", offset + line.size()}, {"payload_bytes", payload_bytes},
                      {"status", r.ok ? "ok" : "failed"}};
        if (!r.ok) entry["diagnostics"] = r.diagnostics;
        samples.push_back(entry);
        emit(line.data(), line.size());
        if (payload_bytes > 0) emit(r.payload.data(), payload_bytes);
    }
    for (auto& t : pool) t.join();
    records.close();
    if (!records) throw DomainError("failed writing " + records_path);

    DatasetSummary summary;
    summary.digest = sha.hex();
    summary.failed = failed;
    summary.manifest = {
        {"format", "FRSK1"},
        {"version", 1},
        {"n_samples", n},
        {"grid", grid_to_json(spec.grid)},
        {"times", spec.times},
        {"payload_layout", "float32 little-endian [T][x1][x2]"},
        {"stable", stable_to_json(spec.stable)},
        {"beta", spec.subordinator.beta()},
        {"sigma", spec.sigma},
        {"safe_set", barrier_to_json(spec.safe)},
        {"far_field", to_string(spec.far_field)},
        {"seed", spec.seed},
        {"family", family_to_json(spec.family)},
        {"solver", solver_options_to_json(spec.solver)},
        {"split", {{"train_fraction", spec.train_fraction}, {"train", train}, {"test", test}}},
        {"samples", samples},
        {"failed", failed},
        {"records_bytes", offset},
        {"digest", summary.digest},
    };

    const std::string tmp_path = out_path + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        std::ifstream in(records_path, std::ios::binary);
        if (!out || !in) throw DomainError("cannot assemble " + out_path);
        out << kMagic << summary.manifest.dump() << '\n';
        out << in.rdbuf();
        out.close();
        if (!out) throw DomainError("failed writing " + tmp_path);
    }
    std::remove(records_path.c_str());
    if (std::rename(tmp_path.c_str(), out_path.c_str()) != 0) throw DomainError("cannot move dataset to " + out_path);
    return summary;
}

RiskField Dataset::field(std::size_t i) const {
    const DatasetRecord& r = records.at(i);
    if (!r.ok) throw DomainError("record " + std::to_string(i) + " holds no field");
    RiskField f;
    f.grid = grid_from_json(manifest.at("grid"));
    f.kind = RiskKind::safety;
    f.times = manifest.at("times").get<std::vector<double>>();
    f.values.assign(r.values.begin(), r.values.end());
    f.in_region = in_region_mask(f.grid, barrier_from_json(manifest.at("safe_set")));
    f.exterior_value = 0.0;
    f.provenance = {{"source", "FRSK1"}, {"index", r.index}};
    return f;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t magic_len = std::strlen(kMagic);
    if (bytes.compare(0, magic_len, kMagic) != 0) throw DomainError(path + " is not an FRSK1 file");
    const std::size_t manifest_end = bytes.find('\n', magic_len);
    if (manifest_end == std::string::npos) throw DomainError("FRSK1 manifest line is unterminated");

    Dataset ds;
    try {
        ds.manifest = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                                  bytes.begin() + static_cast<std::ptrdiff_t>(manifest_end));
    } catch (const json::exception& e) {
        throw DomainError(std::string("FRSK1 manifest is not valid JSON: ") + e.what());
    }
    const std::size_t base = manifest_end + 1;
    const std::string_view section(bytes.data() + base, bytes.size() - base);
    ds.digest = sha256_hex(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(section.data()), section.size()));
    if (ds.digest != ds.manifest.at("digest").get<std::string>()) throw InvariantViolation("FRSK1 digest mismatch");
    if (section.size() != ds.manifest.at("records_bytes").get<std::size_t>()) {
        throw InvariantViolation("FRSK1 records section has the wrong length");
    }

    const Grid grid = grid_from_json(ds.manifest.at("grid"));
    const auto n_times = ds.manifest.at("times").size();
    const std::size_t expected = grid.size() * n_times;
    for (const auto& entry : ds.manifest.at("samples")) {
        DatasetRecord r;
        r.index = entry.at("index").get<std::size_t>();
        const auto off = entry.at("offset").get<std::size_t>();
        const auto header_bytes = entry.at("header_bytes").get<std::size_t>();
        const auto payload_off = entry.at("payload_offset").get<std::size_t>();
        const auto payload_bytes = entry.at("payload_bytes").get<std::size_t>();
        if (off + header_bytes > section.size() || payload_off != off + header_bytes ||
            payload_off + payload_bytes > section.size() || section[off + header_bytes - 1] != '\n') {
            throw InvariantViolation("FRSK1 offsets are inconsistent for sample " + std::to_string(r.index));
        }
        r.header = json::parse(section.substr(off, header_bytes - 1));
        r.ok = r.header.at("status") == "ok";
        r.coeffs = drift_from_json(r.header.at("coeffs"));
        if (r.ok) {
            if (payload_bytes != expected * sizeof(float)) {
                throw InvariantViolation("FRSK1 payload size mismatch for sample " + std::to_string(r.index));
            }
            r.values.resize(expected);
            std::memcpy(r.values.data(), section.data() + payload_off, payload_bytes);
        }
        ds.records.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        if (ds.records[i].ok) validate_field(ds.field(i));
    }
    return ds;
}

}  // namespace fracrisk
