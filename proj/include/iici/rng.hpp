#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace iici {

// Deterministic counter-style generator (splitmix64 finalizer). One u64 of
// state, identical output on every platform, trivially checkpointable.
// All project randomness flows from one root seed through named substreams
// so partial reruns of a pipeline stay reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // [0, n); n > 0
    std::int64_t below(std::int64_t n) {
        return std::int64_t((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
    }

    // Standard normal via Box-Muller; two uniforms per draw, no cached pair
    // so the state stays a single word.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seed for a named child stream of a root seed.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
    std::uint64_t z = root ^ fnv1a64(name);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng substream(std::uint64_t root, std::string_view name) {
    return Rng(substream_seed(root, name));
}

}  // namespace iici
