#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tm2d::motion {

// Skeleton used throughout: positional coordinates (meters, y up) of 8 joints.
enum Joint : std::size_t {
    kRoot = 0,
    kHead,
    kLeftHand,
    kRightHand,
    kLeftKnee,
    kRightKnee,
    kLeftFoot,
    kRightFoot,
};
inline constexpr std::size_t kNumJoints = 8;
inline constexpr std::size_t kMotionWidth = kNumJoints * 3;

// Rest pose, joint-major xyz.
const std::array<double, kMotionWidth>& rest_pose();

// T x d_m joint positions sampled at `fps`.
struct MotionSequence {
    std::size_t frames = 0;
    std::size_t width = kMotionWidth;
    double fps = 60.0;
    std::vector<double> data;  // row-major frames x width

    MotionSequence() = default;
    MotionSequence(std::size_t frames, std::size_t width, double fps);

    std::size_t joints() const { return width / 3; }
    double duration() const { return static_cast<double>(frames) / fps; }
    std::span<double> frame(std::size_t t) { return {data.data() + t * width, width}; }
    std::span<const double> frame(std::size_t t) const { return {data.data() + t * width, width}; }
    double& at(std::size_t t, std::size_t joint, std::size_t axis) { return data[t * width + joint * 3 + axis]; }
    double at(std::size_t t, std::size_t joint, std::size_t axis) const { return data[t * width + joint * 3 + axis]; }

    // Throws ContractError when an invariant (T >= 1, fps > 0, width % 3 == 0,
    // finite values, data size) is violated.
    void validate() const;
    // Frames [begin, end) as a new sequence.
    MotionSequence slice(std::size_t begin, std::size_t end) const;
};

// Per-frame audio descriptors at `rate` frames per second.
// Channel 0: beat impulses; channel 1: onset envelope; remaining: smooth
// harmonic content.
struct AudioFeatureSeq {
    std::size_t frames = 0;
    std::size_t dims = 16;
    double rate = 7.5;
    std::vector<double> data;
    std::vector<double> beat_times;

    double duration() const { return static_cast<double>(frames) / rate; }
    std::span<const double> frame(std::size_t t) const { return {data.data() + t * dims, dims}; }
    AudioFeatureSeq slice(std::size_t begin, std::size_t end) const;
};

inline constexpr std::size_t kMaxTextLength = 84;
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;

struct TextTokens {
    std::vector<int> ids;  // always kMaxTextLength entries
    std::size_t length = 0;
};

}  // namespace tm2d::motion
