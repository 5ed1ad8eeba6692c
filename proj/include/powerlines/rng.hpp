#pragma once

#include <cmath>
#include <cstdint>

namespace powerlines::rng {

// splitmix64 step; the whole toolkit derives randomness from this so results
// are bit-identical across platforms and standard libraries.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    return splitmix64(s);
}

// Key for an independent sub-stream, e.g. one bootstrap iteration.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(0x706f776572ULL, seed), index);
}

class Stream {
   public:
    explicit Stream(std::uint64_t seed) : state_(mix(0x6c696e6573ULL, seed)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_gauss() {
        // Box-Muller; u1 shifted into (0, 1] so the log is finite.
        double u1 = 1.0 - next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n) by rejection, so no modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~0ULL) / n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

   private:
    std::uint64_t state_;
};

}  // namespace powerlines::rng
