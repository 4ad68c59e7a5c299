#pragma once

#include <cstdint>

namespace bifrail {

// splitmix64: the deterministic, portable stream used for data generation and
// optimizer jitter. Replicate streams come from mix_seed so their order does
// not matter.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    SplitMix64 a{master};
    SplitMix64 b{stream ^ 0xD1B54A32D192ED03ULL};
    return a.next_u64() ^ b.next_u64();
}

}  // namespace bifrail
