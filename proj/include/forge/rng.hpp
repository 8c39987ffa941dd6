#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace forge {

// All randomness in the pipeline flows through this header. std::mt19937_64 is
// fully specified by the standard; the distribution mappings below are our own
// because std::uniform_*_distribution output is implementation-defined and
// would break the byte-identical reproducibility contract.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed plus stream coordinates
// (e.g. image index, epoch). Chaining splitmix64 keeps nearby coordinates
// decorrelated.
inline uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> words) {
    uint64_t s = splitmix64(seed);
    for (uint64_t w : words) s = splitmix64(s ^ (w + 0x632be59bd9b4e019ULL));
    return s;
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a) { return derive_seed(seed, {a}); }
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) { return derive_seed(seed, {a, b}); }

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        double v = lo + next_double() * (hi - lo);
        return v < lo ? lo : (v > hi ? hi : v);
    }

    // Uniform integer in [0, n) by rejection; unbiased.
    uint64_t next_below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates; deterministic given the rng state.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// First k entries of a seeded shuffle of 0..n-1: a uniform sample without
// replacement.
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (k >= n) return idx;
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace forge
