#pragma once

#include <cstdint>

namespace tm2d::num {

// PCG32 (XSH-RR). Portable and fully determined by (state, inc), so runs
// reproduce bit-for-bit across platforms and can be checkpointed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0xda3e39cb94b95bdbULL);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    // Unbiased integer in [0, n). n must be > 0.
    std::uint32_t below(std::uint32_t n);
    double normal(double mean = 0.0, double stddev = 1.0);

    // Child generator with an independent stream, derived deterministically.
    Rng fork(std::uint64_t salt);

    std::uint64_t state() const { return state_; }
    std::uint64_t increment() const { return inc_; }
    static Rng from_raw(std::uint64_t state, std::uint64_t inc);

    bool operator==(const Rng&) const = default;

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 0;
};

}  // namespace tm2d::num
