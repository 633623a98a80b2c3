// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace cipherpix {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and stream tags.
// Used so that line i of a corpus (or epoch e of a run) is reproducible
// in isolation, independent of evaluation order.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag + 0x51ed2701a3b5049dull));
}
inline uint64_t derive_seed(uint64_t seed, uint64_t tag_a, uint64_t tag_b) {
    return derive_seed(derive_seed(seed, tag_a), tag_b);
}
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return derive_seed(derive_seed(seed, a, b), c);
}

// Deterministic PRNG with a fully specified update rule; behaves the same
// on every platform, unlike std:: distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x8af2b311f6a5c3ddull)) {}

    uint64_t u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n). n must be > 0.
    uint64_t index(uint64_t n) {
        const uint64_t threshold = (0-n) % n;
        for (;;) {
            const uint64_t r = u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    // Inclusive integer range.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(index(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller (no cached spare: keeps the stream
    // position a pure function of the number of draws).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Normal truncated to +/- 2 standard deviations by resampling.
    double truncated_normal(double stddev) {
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= 2.0) {
                return z * stddev;
            }
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t state_;
};

}  // namespace cipherpix
