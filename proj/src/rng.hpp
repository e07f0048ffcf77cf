#pragma once
#include <cstdint>
#include <random>

namespace qnet {

// One independent generator per (seed, stream). Streams index trials so
// parallel Monte Carlo draws identical numbers regardless of worker count.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(sq);
}

// Explicit 53-bit mapping; unlike uniform_real_distribution the draw sequence
// does not depend on the standard-library implementation.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace qnet
