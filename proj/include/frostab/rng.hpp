#pragma once

#include <cstdint>
#include <random>

namespace frostab {

// Seeded generator wrapper.  Doubles are derived from the raw 64-bit stream
// directly (53-bit mantissa scaling) rather than through
// std::uniform_real_distribution, so a given seed yields the same sample
// sequence on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // fair +/-1
    double sign() { return (gen_() & 1u) ? 1.0 : -1.0; }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace frostab
