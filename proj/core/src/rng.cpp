#include "qmanip/rng.hpp"

#include <cassert>
#include <limits>
#include <utility>

namespace qm {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

int Rng::uniform_int(int lo, int hi) {
    assert(lo <= hi);
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % range;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return lo + static_cast<int>(x % range);
}

std::vector<int> Rng::sample_without_replacement(std::vector<int> pool, int k) {
    assert(k >= 0 && k <= static_cast<int>(pool.size()));
    for (int i = 0; i < k; ++i) {
        const int j = uniform_int(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

} // namespace qm
