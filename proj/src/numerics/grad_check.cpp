#include "tm2d/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "tm2d/common/errors.hpp"

namespace tm2d::num {

double grad_check(const GraphBuilder& f, const std::vector<Tensor>& inputs, GradCheckOptions opt) {
    std::vector<Tensor> leaves = inputs;
    std::vector<bool> had_flag;
    for (auto& t : leaves) {
        had_flag.push_back(t.requires_grad());
        t.set_requires_grad(true);
        t.zero_grad();
    }

    const Tensor out = f(leaves);
    if (out.numel() != 1) {
        throw ContractError("grad_check: builder must return a scalar, got " + shape_str(out.shape()));
    }
    out.backward();

    double worst = 0.0;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        auto& t = leaves[k];
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) {
            std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
        }
        std::vector<double> numeric(t.numel(), 0.0);
        auto values = t.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            double plus = 0.0, minus = 0.0;
            {
                NoGradGuard guard;
                values[i] = saved + opt.step;
                plus = f(leaves).item();
                values[i] = saved - opt.step;
                minus = f(leaves).item();
            }
            values[i] = saved;
            numeric[i] = (plus - minus) / (2.0 * opt.step);
        }
        double diff = 0.0, scale = opt.abs_floor;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
            scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
        }
        worst = std::max(worst, diff / scale);
    }

    for (std::size_t k = 0; k < leaves.size(); ++k) {
        leaves[k].zero_grad();
        leaves[k].set_requires_grad(had_flag[k]);
    }
    return worst;
}

}  // namespace tm2d::num
