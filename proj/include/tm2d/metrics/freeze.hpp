#pragma once

#include "tm2d/motion/motion.hpp"

namespace tm2d::metrics {

inline constexpr double kFreezeSpeed = 0.015;     // m/s
inline constexpr double kFreezeDuration = 3.0;    // s
inline constexpr double kAucMaxThreshold = 0.03;  // m/s
inline constexpr std::size_t kAucThresholds = 64;

// Percentage of frames inside maximal runs, lasting at least `min_duration`
// seconds, whose fastest joint moves slower than `v_thresh`.
double pff(const motion::MotionSequence& m, double v_thresh = kFreezeSpeed, double min_duration = kFreezeDuration);

// Trapezoidal mean of pff over 64 evenly spaced thresholds in [0, t_max].
double auc_f(const motion::MotionSequence& m, double t_max = kAucMaxThreshold,
             double min_duration = kFreezeDuration);

}  // namespace tm2d::metrics
