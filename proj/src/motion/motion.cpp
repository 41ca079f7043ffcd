#include "tm2d/motion/motion.hpp"

#include <cmath>

#include "tm2d/common/errors.hpp"

namespace tm2d::motion {

const std::array<double, kMotionWidth>& rest_pose() {
    static const std::array<double, kMotionWidth> pose = {
        0.0,   0.95, 0.0,  // root
        0.0,   1.65, 0.0,  // head
        0.35,  1.0,  0.0,  // left hand
        -0.35, 1.0,  0.0,  // right hand
        0.1,   0.5,  0.02, // left knee
        -0.1,  0.5,  0.02, // right knee
        0.1,   0.05, 0.0,  // left foot
        -0.1,  0.05, 0.0,  // right foot
    };
    return pose;
}

MotionSequence::MotionSequence(std::size_t frames_, std::size_t width_, double fps_)
    : frames(frames_), width(width_), fps(fps_), data(frames_ * width_, 0.0) {}

void MotionSequence::validate() const {
    if (frames < 1) {
        throw ContractError("motion has no frames");
    }
    if (!(fps > 0.0) || !std::isfinite(fps)) {
        throw ContractError("motion fps must be positive");
    }
    if (width == 0 || width % 3 != 0) {
        throw ContractError("motion width " + std::to_string(width) + " is not a multiple of 3");
    }
    if (data.size() != frames * width) {
        throw ContractError("motion data size does not match " + std::to_string(frames) + "x" + std::to_string(width));
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw ContractError("motion contains a non-finite value");
        }
    }
}

MotionSequence MotionSequence::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > frames) {
        throw RangeError("motion slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
                         std::to_string(frames) + " frames");
    }
    MotionSequence out(end - begin, width, fps);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(begin * width),
              data.begin() + static_cast<std::ptrdiff_t>(end * width), out.data.begin());
    return out;
}

AudioFeatureSeq AudioFeatureSeq::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > frames) {
        throw RangeError("audio slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
                         std::to_string(frames) + " frames");
    }
    AudioFeatureSeq out;
    out.frames = end - begin;
    out.dims = dims;
    out.rate = rate;
    out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin * dims),
                    data.begin() + static_cast<std::ptrdiff_t>(end * dims));
    const double t0 = static_cast<double>(begin) / rate;
    const double t1 = static_cast<double>(end) / rate;
    for (double b : beat_times) {
        if (b >= t0 && b < t1) {
            out.beat_times.push_back(b - t0);
        }
    }
    return out;
}

}  // namespace tm2d::motion
