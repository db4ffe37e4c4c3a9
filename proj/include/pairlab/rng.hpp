#pragma once

#include <cstdint>

#include "pairlab/math.hpp"

namespace pairlab {

// Counter-based splitmix64 stream. The state advances by a fixed odd
// increment, so the k-th output is a pure function of (seed, k): disjoint
// sub-streams for parallel work come from child_seed rather than jumping.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal by inverse-CDF; consumes exactly one draw.
    double next_normal() { return normal_quantile(next_uniform()); }

    // Derived seed for sub-stream `index` of `master`. Deterministic and
    // order-free: workers can claim indices in any order.
    static std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
        std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

}  // namespace pairlab
