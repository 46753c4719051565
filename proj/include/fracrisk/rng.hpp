#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace fracrisk {

/// Philox4x32-10 block function (Salmon et al., SC'11). Exposed for the
/// known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream.
///
/// Every draw is a pure function of (seed, stream id, position), so two
/// streams built from the same pair replay the same sequence and distinct
/// stream ids index disjoint counter ranges. Monte Carlo code hands one
/// stream to each path, which makes results independent of how paths are
/// distributed over workers.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    /// Standard normal (Box-Muller, pairs cached).
    double normal() noexcept;
    /// Exp(1).
    double exponential() noexcept;

    /// Independent child stream, e.g. one per Monte Carlo path.
    RngStream substream(std::uint64_t index) const noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int available_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// Stable 64-bit stream id for a named component (FNV-1a).
std::uint64_t stream_id_for(std::string_view component) noexcept;

/// Derives a child stream id from a parent id and an index (splitmix64 finalizer).
std::uint64_t mix_stream(std::uint64_t parent, std::uint64_t index) noexcept;

}  // namespace fracrisk
