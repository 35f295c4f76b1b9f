#pragma once

#include <cstdint>
#include <random>

namespace fdm {

using Rng = std::mt19937_64;

// SplitMix64 finalizer, used to derive independent child seeds from a
// master seed plus a stream index (env index, episode index, ...).
inline std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(hash_seed(seed, stream));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean, double std) {
    if (std <= 0.0) return mean;
    return std::normal_distribution<double>(mean, std)(rng);
}

}  // namespace fdm
