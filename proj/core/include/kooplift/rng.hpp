#pragma once

#include <cstdint>

namespace kooplift {

/// SplitMix64. This is the library's one PRNG: a fixed, documented algorithm
/// so seeded runs reproduce bit-identically on every platform.
/// Reference: Steele, Lea & Flood, "Fast splittable pseudorandom number
/// generators" (the java.util.SplittableRandom finalizer).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53 bits of precision.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform in [0, bound). The modulo bias is < 2^-53 for the bounds used
    /// here (dataset sizes), far below anything observable.
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

/// Deterministically derive an independent stream seed (e.g. one per epoch).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 rng(seed ^ (0xA0761D6478BD642Full + stream * 0xE7037ED1A0B428DBull));
    return rng.next();
}

}  // namespace kooplift
