#pragma once

#include <cstdint>
#include <random>

namespace coopsim {

// splitmix64 step; used to derive independent per-replication seeds.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

} // namespace coopsim
