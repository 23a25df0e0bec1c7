#include "aet/rng.hpp"

#include <boost/math/distributions/normal.hpp>

namespace aet {

std::uint64_t mix_seed(std::uint64_t state, std::uint64_t salt) {
    std::uint64_t z = state + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double RandomStream::normal() {
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    return boost::math::quantile(std_normal, uniform_pos());
}

std::uint32_t RandomStream::uniform_int(std::uint32_t n) {
    if (n <= 1) return 0;
    // rejection sampling on the top bits to avoid modulo bias
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = (~std::uint64_t{0} / span) * span;
    std::uint64_t r;
    do { r = engine_(); } while (r >= limit);
    return static_cast<std::uint32_t>(r % span);
}

} // namespace aet
