#pragma once

#include <cstdint>

namespace qshnn {

/// SplitMix64 (Steele/Lea/Burton; Vigna's public-domain reference constants).
/// A 64-bit counter-based generator: the state advances by a fixed odd
/// increment and each output is a finalizer hash of the counter, so streams
/// are bit-reproducible on every platform. All randomness in this project
/// (weight init, targets, probe states) flows through this generator;
/// std::random distributions are avoided because their output is
/// implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double strictly inside (0, 1): 53-bit mantissa, half-step offset.
    double uniform_open() noexcept {
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    /// Uniform double strictly inside (-1, 1).
    double uniform_symmetric() noexcept { return 2.0 * uniform_open() - 1.0; }

private:
    std::uint64_t state_;
};

/// Derives an independent sub-stream seed from a base seed. Distinct stream
/// ids give decorrelated generators even when the base seed is reused for
/// several purposes in one experiment (targets, weights, probe states).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return g.next();
}

}  // namespace qshnn
