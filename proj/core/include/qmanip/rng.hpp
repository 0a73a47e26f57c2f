#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qm {

// Derives an independent stream seed from a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Deterministic RNG wrapper. All randomness in the library flows through
// this class so that seeded results are stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi], inclusive. Rejection-sampled, unbiased.
    int uniform_int(int lo, int hi);

    // First k elements of a random permutation of pool.
    std::vector<int> sample_without_replacement(std::vector<int> pool, int k);

private:
    std::mt19937_64 gen_;
};

} // namespace qm
