#pragma once

// Per-replication random streams.
//
// Stream derivation: a replication's generator state is four successive
// SplitMix64 outputs seeded with
//     mix(seed) ^ mix(replication * 2 + purpose + 0x9e3779b97f4a7c15),
// where purpose is 0 for study data and 1 for policy decisions. The generator is
// xoshiro256** (period 2^256 - 1). Because every replication owns its streams,
// results do not depend on how replications are spread over workers.

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace accumbias {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t x) {
    return SplitMix64(x).next();
}

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

private:
    std::array<std::uint64_t, 4> s_{};
};

enum class StreamPurpose : std::uint64_t { data = 0, decision = 1 };

inline Xoshiro256 derive_stream(std::uint64_t seed, std::uint64_t replication,
                                StreamPurpose purpose) {
    const std::uint64_t key =
        mix64(seed) ^ mix64(replication * 2 + static_cast<std::uint64_t>(purpose) +
                            0x9e3779b97f4a7c15ULL);
    return Xoshiro256(key);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Xoshiro256& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace accumbias
