#pragma once

#include <functional>
#include <vector>

#include "tm2d/motion/motion.hpp"

namespace tm2d::metrics {

// past -> hypothesized futures, each `future_frames` long.
using PredictorOracle =
    std::function<std::vector<motion::MotionSequence>(const motion::MotionSequence& past, std::size_t future_frames)>;

// min_i ||f_i(M[t0, t1)) - M[t1, t2)|| / sqrt(frames * d_m), frame indices.
double mpd(const PredictorOracle& oracle, const motion::MotionSequence& m, std::size_t t0, std::size_t t1,
           std::size_t t2);

// Retrieves the k reference windows whose past segment has the nearest
// kinetic features (ties by lower window index) and returns their
// continuations, shifted horizontally so the roots meet at the last past frame.
// Windows are taken every `stride` frames.
PredictorOracle knn_predictor(const std::vector<motion::MotionSequence>& reference, std::size_t k,
                              std::size_t past_frames, std::size_t future_frames, std::size_t stride = 1);

}  // namespace tm2d::metrics
