// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace trifuse {

// splitmix64. Small, fast, and bit-identical on every platform, which is all
// the procedural generators need. Not for cryptography.
struct rng64 {
    uint64_t state = 0;

    explicit rng64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next() % n; }
};

// Derives an independent stream seed; used to give each plane/channel/frame
// its own generator without correlated sequences.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    rng64 r(seed);
    uint64_t h = r.next();
    rng64 s(h ^ (stream * 0xda942042e4dd58b5ull + 0x2545f4914f6cdd1dull));
    return s.next();
}

}  // namespace trifuse
