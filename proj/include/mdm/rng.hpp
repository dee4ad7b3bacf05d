#pragma once

#include <cstdint>
#include <random>

namespace mdm {

// splitmix64; used to decorrelate derived seeds.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seeded random source. split() yields an independent child stream, so
// parallel batch corruption stays reproducible regardless of scheduling.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed), engine_(mix_seed(seed)) {}

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // in [0, n)
    uint64_t index(uint64_t n) {
        return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
    }

    Rng split() {
        uint64_t child = mix_seed(state_ ^ engine_());
        return Rng(child);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    uint64_t state_;
    std::mt19937_64 engine_;
};

}  // namespace mdm
