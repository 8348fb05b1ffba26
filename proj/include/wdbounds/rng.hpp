#pragma once

// Reproducible random streams: xoshiro256++ seeded through SplitMix64.
// Every simulation step consumes exactly one 64-bit draw, so two simulators
// fed the same draws stay in lock-step (this is what the coupling code uses).

#include <array>
#include <cstdint>
#include <limits>

namespace wdb {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output function (Stafford variant 13).
constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
    constexpr std::uint64_t operator()() noexcept {
        state_ += kGoldenGamma;
        return splitmix64_finalize(state_);
    }

private:
    std::uint64_t state_;
};

// Seed of the index-th replication (or sub-stream) of a base seed. Depends only
// on (base, index), never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64_finalize(base ^ (index * kGoldenGamma));
}

class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256pp(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

// Uniform on [0,1) from the top 53 bits.
constexpr double to_unit(std::uint64_t raw) noexcept {
    return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

// Fair coin from the top bit.
constexpr int to_bit(std::uint64_t raw) noexcept { return static_cast<int>(raw >> 63); }

// Test hook: a generator that always returns the same word.
struct ConstantGenerator {
    using result_type = std::uint64_t;
    std::uint64_t value = 0;
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    constexpr result_type operator()() const noexcept { return value; }
};

}  // namespace wdb
