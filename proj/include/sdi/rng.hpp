#pragma once

#include <cstdint>

namespace sdi {

/// splitmix64: counter-style generator with an explicit 64-bit seed.
/// Used everywhere randomness is needed so that runs are reproducible
/// from (seed, cell index) alone.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Wigner semicircle sample on [-1, 1], by rejection from the uniform box.
    double semicircle() {
        for (;;) {
            double x = uniform(-1.0, 1.0);
            double v = uniform01();
            if (v * v <= 1.0 - x * x) return x;
        }
    }

  private:
    uint64_t state_;
};

/// Derive a stream seed from a global seed and an index (e.g. grid cell).
inline uint64_t seed_for(uint64_t global_seed, uint64_t index) {
    Rng r(global_seed ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull));
    return r.next_u64();
}

}  // namespace sdi
