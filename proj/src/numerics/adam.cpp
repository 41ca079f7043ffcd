#include "tm2d/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "tm2d/common/errors.hpp"

namespace tm2d::num {

AdamState make_adam_state(std::span<const Tensor> params, AdamConfig config) {
    AdamState state;
    state.config = config;
    for (const auto& p : params) {
        state.first_moment.emplace_back(p.numel(), 0.0);
        state.second_moment.emplace_back(p.numel(), 0.0);
    }
    return state;
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 const AdamConfig& cfg, std::uint64_t t) {
    if (param.size() != m.size() || param.size() != v.size() || (!grad.empty() && grad.size() != param.size())) {
        throw ShapeError("adam_update: parameter, gradient and moment sizes disagree");
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad.empty() ? 0.0 : grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
    if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but state tracks " +
                         std::to_string(state.first_moment.size()));
    }
    ++state.step_count;
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam_update(params[i].mutable_data(), params[i].grad(), state.first_moment[i], state.second_moment[i],
                    state.config, state.step_count);
    }
}

void zero_grads(std::span<Tensor> params) {
    for (auto& p : params) {
        p.zero_grad();
    }
}

}  // namespace tm2d::num
