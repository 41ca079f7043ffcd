#include "tm2d/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace tm2d::num {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
}

Rng Rng::from_raw(std::uint64_t state, std::uint64_t inc) {
    Rng r;
    r.state_ = state;
    r.inc_ = inc | 1u;
    return r;
}

std::uint32_t Rng::next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32u) | next_u32();
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint32_t Rng::below(std::uint32_t n) {
    // Lemire-style rejection on the low range to avoid modulo bias.
    const std::uint32_t threshold = (0u - n) % n;
    for (;;) {
        const std::uint32_t r = next_u32();
        if (r >= threshold) {
            return r % n;
        }
    }
}

double Rng::normal(double mean, double stddev) {
    // Box-Muller without caching the second variate keeps the state a pure
    // function of the draw count.
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t salt) {
    const std::uint64_t seed = next_u64();
    return Rng(seed ^ (salt * 0x9e3779b97f4a7c15ULL), salt + 0x632be59bd9b4e019ULL);
}

}  // namespace tm2d::num
