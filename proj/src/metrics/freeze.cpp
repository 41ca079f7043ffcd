#include "tm2d/metrics/freeze.hpp"

#include <algorithm>

#include "tm2d/common/errors.hpp"
#include "tm2d/metrics/features.hpp"

namespace tm2d::metrics {

namespace {

std::vector<double> max_joint_speed(const motion::MotionSequence& m) {
    const std::size_t J = m.joints();
    const auto v = joint_speeds(m);
    std::vector<double> out(m.frames, 0.0);
    for (std::size_t t = 0; t < m.frames; ++t) {
        out[t] = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(t * J),
                                   v.begin() + static_cast<std::ptrdiff_t>((t + 1) * J));
    }
    return out;
}

double frozen_percent(const std::vector<double>& speed, double fps, double v_thresh, double min_duration) {
    std::size_t frozen = 0, run = 0;
    const auto close_run = [&] {
        if (static_cast<double>(run) / fps >= min_duration) {
            frozen += run;
        }
        run = 0;
    };
    for (double s : speed) {
        if (s < v_thresh) {
            ++run;
        } else {
            close_run();
        }
    }
    close_run();
    return 100.0 * static_cast<double>(frozen) / static_cast<double>(speed.size());
}

}  // namespace

double pff(const motion::MotionSequence& m, double v_thresh, double min_duration) {
    if (m.frames < 2) {
        throw ShapeError("pff needs >= 2 frames, got " + std::to_string(m.frames));
    }
    return frozen_percent(max_joint_speed(m), m.fps, v_thresh, min_duration);
}

double auc_f(const motion::MotionSequence& m, double t_max, double min_duration) {
    if (m.frames < 2) {
        throw ShapeError("auc_f needs >= 2 frames, got " + std::to_string(m.frames));
    }
    if (!(t_max > 0.0)) {
        throw ConfigError("auc_f: threshold range must be positive");
    }
    const auto speed = max_joint_speed(m);
    const double step = t_max / static_cast<double>(kAucThresholds - 1);
    double area = 0.0;
    double prev = frozen_percent(speed, m.fps, 0.0, min_duration);
    for (std::size_t i = 1; i < kAucThresholds; ++i) {
        const double cur = frozen_percent(speed, m.fps, step * static_cast<double>(i), min_duration);
        area += 0.5 * (prev + cur) * step;
        prev = cur;
    }
    return area / t_max;
}

}  // namespace tm2d::metrics
