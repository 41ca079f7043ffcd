#include "tm2d/metrics/beats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tm2d/common/errors.hpp"
#include "tm2d/metrics/features.hpp"

namespace tm2d::metrics {

BeatList dance_beats(const motion::MotionSequence& m) {
    if (m.frames < 3) {
        throw ShapeError("dance beats need >= 3 frames, got " + std::to_string(m.frames));
    }
    const std::size_t T = m.frames, J = m.joints();
    const auto v = joint_speeds(m);
    std::vector<double> speed(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < J; ++j) {
            speed[t] += v[t * J + j] / static_cast<double>(J);
        }
    }
    // Centered box filter, shrinking at the edges.
    const std::size_t half = kBeatSmoothing / 2;
    std::vector<double> smooth(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t a = t >= half ? t - half : 0;
        const std::size_t b = std::min(T - 1, t + half);
        double s = 0.0;
        for (std::size_t u = a; u <= b; ++u) {
            s += speed[u];
        }
        smooth[t] = s / static_cast<double>(b - a + 1);
    }
    std::vector<double> sorted = smooth;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((T - 1) / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;
    // Rounding noise on a constant profile must not read as a dip.
    const double below = median - 1e-9 * std::max(median, 1e-12);
    BeatList beats;
    for (std::size_t t = 1; t + 1 < T; ++t) {
        // Strict on the left, so a flat-bottomed minimum yields one beat.
        if (smooth[t] < smooth[t - 1] && smooth[t] <= smooth[t + 1] && smooth[t] < below) {
            beats.push_back(static_cast<double>(t) / m.fps);
        }
    }
    return beats;
}

double beat_align(const BeatList& music, const BeatList& dance, double sigma) {
    if (music.empty()) {
        throw ContractError("beat_align: empty music beat list");
    }
    if (!(sigma > 0.0)) {
        throw ConfigError("beat_align: sigma must be positive");
    }
    if (dance.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (double bm : music) {
        double best = std::numeric_limits<double>::infinity();
        for (double bd : dance) {
            best = std::min(best, (bd - bm) * (bd - bm));
        }
        total += std::exp(-best / (2.0 * sigma * sigma));
    }
    return total / static_cast<double>(music.size());
}

}  // namespace tm2d::metrics
