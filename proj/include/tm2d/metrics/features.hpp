#pragma once

#include <vector>

#include "tm2d/motion/motion.hpp"

namespace tm2d::metrics {

using FeatureVector = std::vector<double>;

// [T x J] joint speeds in m/s: central differences inside, one-sided at the
// two ends. Needs T >= 2.
std::vector<double> joint_speeds(const motion::MotionSequence& m);

// Per-joint mean squared speed followed by per-joint speed variance (2J).
// Only interior frames are used, where central differences exist; a
// two-frame motion falls back to its single forward difference.
FeatureVector kinetic_features(const motion::MotionSequence& m);

inline constexpr double kHandsCloseDistance = 0.3;
// A foot counts as lifted above this fraction of the root height.
inline constexpr double kFootLiftFraction = 0.2;

// Time-averaged boolean relations on the 8-joint skeleton (width 8, each in
// [0, 1]): left foot lifted, right foot lifted, hands closer than 0.3 m, root
// above its median height, then distance above its median for the pairs
// hand-hand, foot-foot, left hand-left foot, right hand-right foot.
FeatureVector geometric_features(const motion::MotionSequence& m);

}  // namespace tm2d::metrics
