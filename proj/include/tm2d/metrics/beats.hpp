#pragma once

#include <vector>

#include "tm2d/motion/motion.hpp"

namespace tm2d::metrics {

// Strictly increasing beat times.
using BeatList = std::vector<double>;

inline constexpr std::size_t kBeatSmoothing = 5;
inline constexpr double kBeatAlignSigma = 3.0;

// Local minima (in seconds) of the box-smoothed mean joint speed that lie
// below the sequence's median speed.
BeatList dance_beats(const motion::MotionSequence& m);

// (1/|B_m|) sum_m exp(-min_d (b_d - b_m)^2 / (2 sigma^2)); 0 for no dance beats.
double beat_align(const BeatList& music, const BeatList& dance, double sigma = kBeatAlignSigma);

}  // namespace tm2d::metrics
