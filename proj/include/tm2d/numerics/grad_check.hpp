#pragma once

#include <functional>
#include <vector>

#include "tm2d/numerics/tensor.hpp"

namespace tm2d::num {

struct GradCheckOptions {
    double step = 1e-5;
    double abs_floor = 1e-8;
};

using GraphBuilder = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares reverse-mode gradients of the scalar f(inputs) against central
// finite differences. Per input tensor the error is
//   max_i |analytic_i - numeric_i| / max(max|analytic|, max|numeric|, abs_floor)
// and the largest such value over all inputs is returned. Inputs are leaves;
// their values are perturbed in place and restored.
double grad_check(const GraphBuilder& f, const std::vector<Tensor>& inputs, GradCheckOptions opt = {});

}  // namespace tm2d::num
