#pragma once

#include <cmath>
#include <cstdint>

namespace fuzzydp::rng {

// SplitMix64 finalizer. Good avalanche, cheap, stateless.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based word: a pure function of (seed, stream, a, b). Identical
// inputs give identical outputs regardless of call order or thread.
constexpr std::uint64_t word(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ stream);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

// Uniform draw in (0, 1].
inline double uniform(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via the Box-Muller trig form; two uniforms per draw.
// Distributional contract only, not bit-level across platforms.
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t a, std::uint64_t b) {
    const double u1 = uniform(word(seed, stream, a, 2 * b));
    const double u2 = uniform(word(seed, stream, a, 2 * b + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace fuzzydp::rng
