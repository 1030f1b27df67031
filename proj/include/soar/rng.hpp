#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "soar/common.hpp"

namespace soar {

// splitmix64 finalizer; good avalanche for seed mixing.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x00000100000001b3ull;
    }
    return h;
}

// All randomness in the project flows through named streams derived from one
// global seed, e.g. derive_seed(seed, "attack/example/17/restart/3"). Distinct
// labels give independent streams; the same (seed, label) always replays.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return mix64(base ^ mix64(fnv1a64(label)));
}

// Deterministic generator with platform-independent uniform/normal draws
// (xoshiro256** core, Box-Muller normals; no libstdc++ distributions).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = mix64(s += 0x9e3779b97f4a7c15ull);
    }

    RngStream(std::uint64_t base, std::string_view label) : RngStream(derive_seed(base, label)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    double normal() {
        // Box-Muller; u1 in (0,1] keeps the log finite.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Vec normal_vec(std::size_t n) {
        Vec v(n);
        for (auto& x : v) x = normal();
        return v;
    }

    Vec uniform_vec(std::size_t n, double lo, double hi) {
        Vec v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Deterministic Fisher-Yates; std::shuffle is implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, RngStream& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace soar
