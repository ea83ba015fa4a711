#pragma once

#include <cstdint>

namespace lrom {

/// SplitMix64 stream. Part of the reproducibility contract: generated
/// sequences are identical across platforms for a given seed, which the
/// standard library distributions do not guarantee. The generator id
/// recorded in model metadata refers to this implementation.
class SplitMix64 {
public:
    static constexpr const char* kGeneratorId = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Derive an independent child stream (for restarts, per-set seeds).
    std::uint64_t fork_seed() { return next_u64(); }

private:
    std::uint64_t state_;
};

}  // namespace lrom
