#pragma once

// Deterministic random streams. Every source of randomness in the project goes
// through these two generators so results are bit-identical across platforms
// and standard libraries (std::*_distribution is not portable).
//
//   SplitMix64   - seeding / key mixing (Steele, Lea, Flood 2014 constants)
//   Xoshiro256** - bulk streams (Blackman & Vigna 2018)

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace stegcnn {

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Combines a seed with a stream index into a new seed. Used to derive
/// per-image keys and independent named streams from one master seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 sm{seed ^ (0xd1b54a32d192ed03ULL * (index + 1))};
    sm.next();
    return sm.next();
}

class Xoshiro256 {
public:
    explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
        SplitMix64 sm{seed};
        for (auto& word : s_) word = sm.next();
    }

    constexpr std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no cached second value, so the stream
    /// position depends only on the number of calls).
    double normal() noexcept;

    bool bit() noexcept { return (next() >> 63) != 0; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Lazily materialized Fisher-Yates permutation of [0, n). Drawing the first m
/// elements performs exactly m swap steps (front-to-back variant), so a shorter
/// prefix drawn from the same seed is always a prefix of a longer one.
class KeyedPermutation {
public:
    KeyedPermutation(std::uint64_t key, std::size_t n);

    std::size_t size() const noexcept { return order_.size(); }

    /// Element at position i; draws any swap steps not yet performed.
    std::size_t operator[](std::size_t i);

    /// First m elements in draw order.
    std::vector<std::size_t> prefix(std::size_t m);

    /// The complete permutation.
    const std::vector<std::size_t>& full();

private:
    Xoshiro256 rng_;
    std::vector<std::size_t> order_;
    std::size_t drawn_ = 0;
};

}  // namespace stegcnn
