#include "tm2d/metrics/mpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "tm2d/common/errors.hpp"
#include "tm2d/metrics/features.hpp"

namespace tm2d::metrics {

using motion::MotionSequence;

double mpd(const PredictorOracle& oracle, const MotionSequence& m, std::size_t t0, std::size_t t1, std::size_t t2) {
    if (!(t0 < t1 && t1 < t2 && t2 <= m.frames)) {
        throw RangeError("mpd: need t0 < t1 < t2 <= " + std::to_string(m.frames) + ", got " + std::to_string(t0) +
                         ", " + std::to_string(t1) + ", " + std::to_string(t2));
    }
    const MotionSequence past = m.slice(t0, t1);
    const MotionSequence truth = m.slice(t1, t2);
    const std::size_t n = t2 - t1;
    const auto hyps = oracle(past, n);
    if (hyps.empty()) {
        throw ContractError("mpd: predictor returned no hypotheses");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : hyps) {
        if (h.frames != n || h.width != m.width) {
            throw ContractError("mpd: hypothesis is " + std::to_string(h.frames) + "x" + std::to_string(h.width) +
                                ", expected " + std::to_string(n) + "x" + std::to_string(m.width));
        }
        double s = 0.0;
        for (std::size_t i = 0; i < truth.data.size(); ++i) {
            const double d = h.data[i] - truth.data[i];
            s += d * d;
        }
        best = std::min(best, std::sqrt(s));
    }
    return best / std::sqrt(static_cast<double>(n * m.width));
}

namespace {

struct WindowIndex {
    std::vector<MotionSequence> motions;
    std::vector<std::pair<std::size_t, std::size_t>> windows;  // (motion, start)
    std::vector<FeatureVector> features;
    std::size_t k = 1, past = 0, future = 0;
};

}  // namespace

PredictorOracle knn_predictor(const std::vector<MotionSequence>& reference, std::size_t k, std::size_t past_frames,
                              std::size_t future_frames, std::size_t stride) {
    if (k == 0 || past_frames < 2 || future_frames == 0 || stride == 0) {
        throw ConfigError("knn_predictor: need k >= 1, past >= 2 frames, future >= 1 frame, stride >= 1");
    }
    auto index = std::make_shared<WindowIndex>();
    index->motions = reference;
    index->k = k;
    index->past = past_frames;
    index->future = future_frames;
    const std::size_t span = past_frames + future_frames;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto& m = reference[i];
        for (std::size_t s = 0; s + span <= m.frames; s += stride) {
            index->windows.emplace_back(i, s);
            index->features.push_back(kinetic_features(m.slice(s, s + past_frames)));
        }
    }
    if (index->windows.size() < k) {
        throw ConfigError("knn_predictor: reference provides " + std::to_string(index->windows.size()) +
                          " windows of " + std::to_string(span) + " frames, need k=" + std::to_string(k));
    }
    return [index](const MotionSequence& past, std::size_t future) {
        if (future > index->future) {
            throw ContractError("knn_predictor: asked for " + std::to_string(future) + " future frames, built for " +
                                std::to_string(index->future));
        }
        const FeatureVector q = kinetic_features(past);
        std::vector<double> dist(index->windows.size());
        for (std::size_t w = 0; w < dist.size(); ++w) {
            double s = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double d = q[i] - index->features[w][i];
                s += d * d;
            }
            dist[w] = s;
        }
        std::vector<std::size_t> order(dist.size());
        std::iota(order.begin(), order.end(), 0);
        const auto kk = static_cast<std::ptrdiff_t>(index->k);
        std::partial_sort(order.begin(), order.begin() + kk, order.end(), [&](std::size_t a, std::size_t b) {
            return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
        });
        std::vector<MotionSequence> out;
        for (std::ptrdiff_t r = 0; r < kk; ++r) {
            const auto [mi, start] = index->windows[order[static_cast<std::size_t>(r)]];
            const MotionSequence& ref = index->motions[mi];
            const std::size_t split = start + index->past;
            MotionSequence cont = ref.slice(split, split + future);
            const std::size_t last = past.frames - 1;
            const double dx = past.at(last, motion::kRoot, 0) - ref.at(split - 1, motion::kRoot, 0);
            const double dz = past.at(last, motion::kRoot, 2) - ref.at(split - 1, motion::kRoot, 2);
            for (std::size_t t = 0; t < cont.frames; ++t) {
                for (std::size_t j = 0; j < cont.joints(); ++j) {
                    cont.at(t, j, 0) += dx;
                    cont.at(t, j, 2) += dz;
                }
            }
            out.push_back(std::move(cont));
        }
        return out;
    };
}

}  // namespace tm2d::metrics
