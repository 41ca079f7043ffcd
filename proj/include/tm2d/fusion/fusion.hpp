#pragma once

#include <span>

#include "tm2d/numerics/rng.hpp"
#include "tm2d/numerics/tensor.hpp"

namespace tm2d::fusion {

using num::Tensor;

// Text influence over [effect_start, effect_start + effect_duration] seconds:
// half-cosine ramp up over the first ramp_fraction of the range, plateau at
// peak, mirrored ramp down.
struct FusionSchedule {
    double effect_start = 0.0;
    double effect_duration = 0.0;
    double peak = 0.8;
    double ramp_fraction = 0.2;

    double effect_end() const { return effect_start + effect_duration; }
    void validate() const;
};

struct FusionWeights {
    double text = 0.0;
    double audio = 1.0;
};

FusionWeights fusion_weight(double t, const FusionSchedule& s);

// w_text * dec_text + (1 - w_text) * dec_audio.
Tensor fuse_features(const Tensor& dec_audio, const Tensor& dec_text, double w_text);

// Samples from the renormalized softmax over the k largest logits (ties at
// the boundary go to the lower index). k = 1 is argmax.
int sample_topk(std::span<const double> logits, std::size_t k, num::Rng& rng);

}  // namespace tm2d::fusion
