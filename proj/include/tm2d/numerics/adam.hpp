#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tm2d/numerics/tensor.hpp"

namespace tm2d::num {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

AdamState make_adam_state(std::span<const Tensor> params, AdamConfig config);

// Bias-corrected Adam update of one parameter block at (1-based) step t.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 const AdamConfig& cfg, std::uint64_t t);

// Applies one update to every parameter using its accumulated gradient
// (a parameter without a gradient is treated as having a zero gradient).
void adam_step(std::span<Tensor> params, AdamState& state);

void zero_grads(std::span<Tensor> params);

}  // namespace tm2d::num
