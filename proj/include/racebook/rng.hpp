#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string_view>

namespace racebook {

// Name recorded in output metadata so other ports can replicate streams.
inline constexpr std::string_view rng_algorithm = "xoshiro256**(seeded by splitmix64)";

// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ull;

// FNV-1a over bytes; used to turn purpose tags into path elements.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t operator()() noexcept { return mix64(state_ += golden_gamma); }

private:
    std::uint64_t state_;
};

// Child seed for a derivation path (master, tag, i0, i1, ...).
//
// Each element is folded in with a full avalanche, so the result depends on
// element order: derive_seed(m, t, {a, b}) != derive_seed(m, t, {b, a}).
// The function is pure and its constants are frozen; changing it changes
// every stream in every output.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::initializer_list<std::uint64_t> path = {}) noexcept {
    std::uint64_t h = mix64(master ^ 0x5851f42d4c957f2dull);
    auto fold = [&h](std::uint64_t x) {
        h = mix64(h + golden_gamma) ^ mix64(x + 0x2545f4914f6cdd1dull);
        h = mix64(h);
    };
    fold(fnv1a64(tag));
    for (std::uint64_t x : path) fold(x);
    return h;
}

// xoshiro256**; satisfies UniformRandomBitGenerator. Distribution helpers are
// implemented here rather than via <random> distributions, whose outputs are
// not specified bit-for-bit across standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    // [0, 1), 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [lo, hi] (inclusive), Lemire's multiply-and-reject.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>((*this)());
        __uint128_t m = static_cast<__uint128_t>((*this)()) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = -range % range;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    std::size_t index(std::size_t n) noexcept {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    // Standard normal via Box-Muller (one draw per call, the sine half is discarded
    // so the stream position does not depend on call history).
    double normal() noexcept {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool coin() noexcept { return ((*this)() >> 63) != 0; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace racebook
