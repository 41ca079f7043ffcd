#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "support.hpp"
#include "tm2d/motion/motion.hpp"
#include "tm2d/numerics/ops.hpp"
#include "tm2d/vqvae/vqvae.hpp"

namespace tm2d::testing {

// Nearest codebook row by a plain scan; on equal distance the first row seen wins.
inline int brute_force_nearest(std::span<const double> z, const num::Tensor& codebook) {
    const std::size_t d = codebook.cols();
    int best = -1;
    double best_d = 0.0;
    for (std::size_t j = 0; j < codebook.rows(); ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = z[c] - codebook.at(j, c);
            s += diff * diff;
        }
        if (best < 0 || s < best_d) {
            best = static_cast<int>(j);
            best_d = s;
        }
    }
    return best;
}

// One random quantization instance. Even trials live on a coarse grid with
// duplicated rows so exact ties are common; odd trials are continuous.
struct QuantInstance {
    num::Tensor z;
    num::Tensor codebook;
};

inline QuantInstance random_quant_instance(num::Rng& rng, int trial) {
    const std::size_t K = 1 + rng.below(32);
    const std::size_t d = 1 + rng.below(6);
    const std::size_t n = 1 + rng.below(8);
    QuantInstance q;
    if (trial % 2 == 0) {
        auto grid = [&] { return 0.5 * static_cast<double>(static_cast<int>(rng.below(5)) - 2); };
        std::vector<double> e(K * d), z(n * d);
        for (auto& v : e) {
            v = grid();
        }
        for (std::size_t j = 1; j < K; ++j) {
            if (rng.below(4) == 0) {
                const std::size_t src = rng.below(static_cast<std::uint32_t>(j));
                std::copy_n(e.begin() + static_cast<long>(src * d), d, e.begin() + static_cast<long>(j * d));
            }
        }
        for (auto& v : z) {
            v = 0.5 * grid();
        }
        q.codebook = num::Tensor::from({K, d}, std::move(e));
        q.z = num::Tensor::from({n, d}, std::move(z));
    } else {
        q.codebook = rand_tensor({K, d}, rng);
        q.z = rand_tensor({n, d}, rng);
    }
    return q;
}

// Relative gap between the encoder gradients of the reconstruction term under
// the straight-through estimator and under the surrogate where the decoder
// sees z_q but its input gradient is pulled back through z directly.
inline double straight_through_gap(vq::VqVaeModel& model, const num::Tensor& motion) {
    auto& ps = model.params();
    std::vector<std::size_t> enc;
    for (std::size_t i = 0; i < ps.names().size(); ++i) {
        if (ps.names()[i].rfind("enc.", 0) == 0) {
            enc.push_back(i);
        }
    }
    auto grads = [&] {
        std::vector<std::vector<double>> g;
        for (std::size_t i : enc) {
            const auto s = ps.tensors()[i].grad();
            g.emplace_back(s.begin(), s.end());
        }
        return g;
    };

    num::zero_grads(ps.tensors());
    const auto z = model.encode(motion);
    const auto q = vq::quantize(z, model.codebook().entries.detach());
    num::l1_loss(model.decode(num::straight_through(z, q.z_q)), motion).backward();
    const auto g_ste = grads();

    // Surrogate: gradient of the reconstruction at the decoder input u = z_q,
    // then the chain rule through the encoder with that vector held fixed.
    num::zero_grads(ps.tensors());
    auto u = num::Tensor::from(q.z_q.shape(), std::vector<double>(q.z_q.data().begin(), q.z_q.data().end()), true);
    num::l1_loss(model.decode(u), motion).backward();
    const auto gu = num::Tensor::from(u.shape(), std::vector<double>(u.grad().begin(), u.grad().end()));
    num::zero_grads(ps.tensors());
    num::sum(num::mul(model.encode(motion), gu)).backward();
    const auto g_sur = grads();
    num::zero_grads(ps.tensors());

    double diff = 0.0, scale = 1e-300;
    for (std::size_t k = 0; k < g_ste.size(); ++k) {
        for (std::size_t i = 0; i < g_ste[k].size(); ++i) {
            diff = std::max(diff, std::abs(g_ste[k][i] - g_sur[k][i]));
            scale = std::max({scale, std::abs(g_ste[k][i]), std::abs(g_sur[k][i])});
        }
    }
    return diff / scale;
}

// 10 s at 60 fps: the whole body translates at 1 m/s along x except for a
// hold of 182 identical frames starting at frame 200. Central differences see
// zero speed on the 180 interior hold frames (3 s) and v/2 on the two edges.
inline motion::MotionSequence freeze_construction() {
    const double fps = 60.0, v = 1.0;
    motion::MotionSequence m(600, motion::kMotionWidth, fps);
    const std::size_t s = 200, hold = 182;
    for (std::size_t t = 0; t < m.frames; ++t) {
        const std::size_t moving = t <= s ? t : (t < s + hold ? s : t - (hold - 1));
        const double x = v * static_cast<double>(moving) / fps;
        for (std::size_t j = 0; j < motion::kNumJoints; ++j) {
            for (std::size_t a = 0; a < 3; ++a) {
                m.at(t, j, a) = motion::rest_pose()[j * 3 + a] + (a == 0 ? x : 0.0);
            }
        }
    }
    return m;
}

inline motion::MotionSequence static_motion(std::size_t frames, double fps = 60.0) {
    motion::MotionSequence m(frames, motion::kMotionWidth, fps);
    for (std::size_t t = 0; t < frames; ++t) {
        std::copy(motion::rest_pose().begin(), motion::rest_pose().end(), m.frame(t).begin());
    }
    return m;
}

// n draws from N(mean, 1) by stratified inverse-CDF sampling: one uniform per
// stratum [i/n, (i+1)/n), then shuffled. Each draw is marginally N(mean, 1);
// the sample moments are far less noisy than with iid draws.
inline std::vector<double> stratified_normal(num::Rng& rng, std::size_t n, double mean) {
    const boost::math::normal_distribution<> nd(mean, 1.0);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n);
        v[i] = boost::math::quantile(nd, std::clamp(u, 1e-300, 1.0 - 1e-16));
    }
    for (std::size_t i = n; i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(static_cast<std::uint32_t>(i))]);
    }
    return v;
}

}  // namespace tm2d::testing
