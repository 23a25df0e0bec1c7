#pragma once

#include <cstdint>
#include <random>

namespace aet {

// splitmix64 step; used to mix seeds with salts so derived streams are
// decorrelated from their parent and from each other.
std::uint64_t mix_seed(std::uint64_t state, std::uint64_t salt);

// Deterministic random stream. All variate generation in the project goes
// through this wrapper (inverse-CDF for the non-uniform laws) so that a given
// seed reproduces bit-identical results on any platform with IEEE doubles.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1); never returns 0 (safe as a quantile-function argument).
    double uniform_pos() {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return u;
    }

    // Standard normal via inverse CDF (keeps the draw count per variate fixed).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer on [0, n), n >= 1.
    std::uint32_t uniform_int(std::uint32_t n);

    // Child stream decorrelated from this one; does not advance the parent.
    RandomStream derive(std::uint64_t salt) const { return RandomStream(mix_seed(seed_, salt)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace aet
