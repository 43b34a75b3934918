#pragma once

// Portable pseudo-random streams. Everything here is specified bit-for-bit so
// that datasets and noise realizations can be regenerated by any
// implementation:
//
//   * seeding/mixing: SplitMix64 (Steele, Lea, Flood 2014)
//   * generator:      xoshiro256** 1.0 (Blackman, Vigna 2018)
//   * uniform:        top 53 bits of the output times 2^-53, in [0, 1)
//   * normal:         Box-Muller on (u1, u2) with u1 mapped to (0, 1];
//                     each pair yields z0 = r cos(2 pi u2) first and
//                     z1 = r sin(2 pi u2) second.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ctreg {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed, a purpose tag and an
/// index: two SplitMix64 rounds over (seed ^ tag) then (prev ^ index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = seed ^ tag;
    std::uint64_t a = splitmix64(s);
    s = a ^ index;
    return splitmix64(s);
}

namespace stream_tag {
inline constexpr std::uint64_t phantom = 0x5048414e544f4d00ULL;  // "PHANTOM"
inline constexpr std::uint64_t noise = 0x4e4f495345000000ULL;    // "NOISE"
inline constexpr std::uint64_t shuffle = 0x5348554646000000ULL;  // "SHUFF"
inline constexpr std::uint64_t probe = 0x50524f4245000000ULL;    // "PROBE"
}  // namespace stream_tag

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
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

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] by multiply-shift on 32 high bits.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(((*this)() >> 32) * span >> 32);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ctreg
