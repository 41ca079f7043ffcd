#include "tm2d/metrics/features.hpp"

#include <algorithm>
#include <cmath>

#include "tm2d/common/errors.hpp"

namespace tm2d::metrics {

using motion::MotionSequence;

namespace {

double joint_distance(const MotionSequence& m, std::size_t t, std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double d = m.at(t, a, k) - m.at(t, b, k);
        s += d * d;
    }
    return std::sqrt(s);
}

double displacement(const MotionSequence& m, std::size_t t0, std::size_t t1, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double d = m.at(t1, j, k) - m.at(t0, j, k);
        s += d * d;
    }
    return std::sqrt(s);
}

double lower_median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

double fraction_above_median(const std::vector<double>& v) {
    const double med = lower_median(v);
    const auto n = std::count_if(v.begin(), v.end(), [med](double x) { return x > med; });
    return static_cast<double>(n) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> joint_speeds(const MotionSequence& m) {
    if (m.frames < 2) {
        throw ShapeError("motion too short for speeds: " + std::to_string(m.frames) + " frame(s), need >= 2");
    }
    const std::size_t T = m.frames, J = m.joints();
    std::vector<double> v(T * J);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t a = t == 0 ? 0 : t - 1;
        const std::size_t b = t + 1 == T ? T - 1 : t + 1;
        const double dt = static_cast<double>(b - a) / m.fps;
        for (std::size_t j = 0; j < J; ++j) {
            v[t * J + j] = displacement(m, a, b, j) / dt;
        }
    }
    return v;
}

FeatureVector kinetic_features(const MotionSequence& m) {
    if (m.frames < 2) {
        throw ShapeError("kinetic features need >= 2 frames, got " + std::to_string(m.frames));
    }
    const std::size_t J = m.joints();
    std::vector<std::vector<double>> speeds(J);
    if (m.frames == 2) {
        for (std::size_t j = 0; j < J; ++j) {
            speeds[j].push_back(displacement(m, 0, 1, j) * m.fps);
        }
    } else {
        for (std::size_t t = 1; t + 1 < m.frames; ++t) {
            for (std::size_t j = 0; j < J; ++j) {
                speeds[j].push_back(displacement(m, t - 1, t + 1, j) * m.fps / 2.0);
            }
        }
    }
    FeatureVector f(2 * J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        const auto& s = speeds[j];
        const double n = static_cast<double>(s.size());
        double mean = 0.0, mean_sq = 0.0;
        for (double x : s) {
            mean += x / n;
            mean_sq += x * x / n;
        }
        double var = 0.0;
        for (double x : s) {
            var += (x - mean) * (x - mean) / n;
        }
        f[j] = mean_sq;
        f[J + j] = var;
    }
    return f;
}

FeatureVector geometric_features(const MotionSequence& m) {
    using namespace motion;
    if (m.width != kMotionWidth) {
        throw ShapeError("geometric features need the " + std::to_string(kNumJoints) + "-joint skeleton, got width " +
                         std::to_string(m.width));
    }
    if (m.frames == 0) {
        throw ShapeError("geometric features need >= 1 frame");
    }
    const std::size_t T = m.frames;
    const double n = static_cast<double>(T);
    FeatureVector f(kNumJoints, 0.0);
    std::vector<double> root_y(T), hands(T), feet(T), left(T), right(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double lift = kFootLiftFraction * m.at(t, kRoot, 1);
        f[0] += m.at(t, kLeftFoot, 1) > lift ? 1.0 : 0.0;
        f[1] += m.at(t, kRightFoot, 1) > lift ? 1.0 : 0.0;
        hands[t] = joint_distance(m, t, kLeftHand, kRightHand);
        f[2] += hands[t] < kHandsCloseDistance ? 1.0 : 0.0;
        root_y[t] = m.at(t, kRoot, 1);
        feet[t] = joint_distance(m, t, kLeftFoot, kRightFoot);
        left[t] = joint_distance(m, t, kLeftHand, kLeftFoot);
        right[t] = joint_distance(m, t, kRightHand, kRightFoot);
    }
    f[0] /= n;
    f[1] /= n;
    f[2] /= n;
    f[3] = fraction_above_median(root_y);
    f[4] = fraction_above_median(hands);
    f[5] = fraction_above_median(feet);
    f[6] = fraction_above_median(left);
    f[7] = fraction_above_median(right);
    return f;
}

}  // namespace tm2d::metrics
