#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace tokshap {

// Deterministic RNG used wherever the toolkit draws randomness. mt19937_64's
// output sequence is pinned by the C++ standard, and the bounded draw below
// avoids uniform_int_distribution (whose mapping is implementation-defined),
// so a seeded run reproduces across compilers and standard libraries.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Unbiased draw from [0, bound) via masked rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(bound - 1);
        for (;;) {
            const std::uint64_t v = next() & mask;
            if (v < bound) return v;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer; decorrelates derived seeds (per case, per method).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace tokshap
