#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "qkd/angle.hpp"

namespace qkd {

// splitmix64 finalizer. Used for seed derivation and counter-based sampling.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded random stream. The spec of every sampling operation takes one of
// these explicitly; there is no ambient RNG state anywhere in the library.
//
// Distribution transforms are written out (uniform bits -> double, inverse
// CDF, Box-Muller) rather than using std:: distributions, whose output
// sequences are implementation-defined and would break byte-identical
// replay of a run from its seed.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : seed_(seed), engine_(seed) {}

    uint64_t seed() const { return seed_; }

    // Independent child stream, stable under sibling reordering.
    RandomStream derive(uint64_t stream_id) const {
        return RandomStream(mix64(seed_ ^ mix64(stream_id)));
    }

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Inter-arrival time of a Poisson process with the given rate.
    double exponential(double rate) {
        return -std::log1p(-uniform()) / rate;
    }

    // Gaussian via Box-Muller; consumes exactly two uniforms per call.
    double normal(double mean, double sigma) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Uniform integer in [0, n), unbiased.
    uint64_t below(uint64_t n) {
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace qkd
