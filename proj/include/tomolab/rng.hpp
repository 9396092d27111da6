#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <random>

namespace tomolab {

// Derives a decorrelated child seed from (seed, stream_index). This is the
// splitmix64 finalizer applied to seed XOR (index+1)*golden_gamma. The exact
// function is part of the output-determinism contract: alternate
// implementations can reproduce our runs bit-for-bit from it (see README).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t z = seed ^ ((stream_index + 1) * 0x9E3779B97F4A7C15ULL);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// Seeded random stream built on std::mt19937_64. The raw engine is standard-
// specified, so its output is identical across platforms; the conversions to
// doubles below are hand-pinned (instead of using std::*_distribution, whose
// algorithms vary between standard library releases) so that whole-run CSV
// output is byte-stable.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe to pass through log().
    double uniform_open() { return 1.0 - uniform(); }

    // Standard exponential.
    double exponential() { return -std::log(uniform_open()); }

    // Standard normal via the Marsaglia polar method; generates pairs and
    // caches the second value.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_cached_ = true;
        return u * f;
    }

    // Complex value with independent N(0,1) real and imaginary parts.
    std::complex<double> normal_complex() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

private:
    std::mt19937_64 engine_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace tomolab
