#include "tm2d/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::fusion {

void FusionSchedule::validate() const {
    if (!(peak > 0.0 && peak <= 1.0)) {
        throw ConfigError("fusion peak must be in (0, 1], got " + std::to_string(peak));
    }
    if (!(ramp_fraction > 0.0 && ramp_fraction <= 0.5)) {
        throw ConfigError("fusion ramp fraction must be in (0, 0.5], got " + std::to_string(ramp_fraction));
    }
    if (!(effect_duration > 0.0) || !std::isfinite(effect_start)) {
        throw RangeError("text effect range needs a finite start and a positive duration");
    }
}

FusionWeights fusion_weight(double t, const FusionSchedule& s) {
    if (!(t >= s.effect_start && t <= s.effect_end()) || s.effect_duration <= 0.0) {
        return {0.0, 1.0};
    }
    const double u = (t - s.effect_start) / s.effect_duration;
    const double r = s.ramp_fraction;
    double w = s.peak;
    if (u < r) {
        w = s.peak * 0.5 * (1.0 - std::cos(std::numbers::pi * u / r));
    } else if (u > 1.0 - r) {
        w = s.peak * 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - u) / r));
    }
    return {w, 1.0 - w};
}

Tensor fuse_features(const Tensor& dec_audio, const Tensor& dec_text, double w_text) {
    if (dec_audio.shape() != dec_text.shape()) {
        throw ShapeError("fuse_features: audio " + num::shape_str(dec_audio.shape()) + " vs text " +
                         num::shape_str(dec_text.shape()));
    }
    if (w_text == 0.0) {
        return dec_audio;
    }
    if (w_text == 1.0) {
        return dec_text;
    }
    return num::add(num::scale(dec_text, w_text), num::scale(dec_audio, 1.0 - w_text));
}

int sample_topk(std::span<const double> logits, std::size_t k, num::Rng& rng) {
    const std::size_t K = logits.size();
    if (k == 0 || k > K) {
        throw RangeError("top-k: k=" + std::to_string(k) + " outside [1, " + std::to_string(K) + "]");
    }
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    const auto better = [&](int a, int b) { return logits[a] > logits[b] || (logits[a] == logits[b] && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    // Draw even for k = 1 so the stream position does not depend on k.
    const double u = rng.uniform();
    const double top = logits[order[0]];
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double v = logits[order[i]];
        if (std::isinf(top) && top > 0) {
            w[i] = v == top ? 1.0 : 0.0;
        } else if (std::isinf(top)) {
            w[i] = i == 0 ? 1.0 : 0.0;
        } else {
            w[i] = std::exp(v - top);
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += w[i] / total;
        if (u < acc) {
            return order[i];
        }
    }
    // Rounding left u above the last partial sum: take the last positive entry.
    for (std::size_t i = k; i-- > 0;) {
        if (w[i] > 0.0) {
            return order[i];
        }
    }
    return order[0];
}

}  // namespace tm2d::fusion
