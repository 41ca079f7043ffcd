#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "support.hpp"
#include "tm2d/common/errors.hpp"
#include "tm2d/fusion/fusion.hpp"
#include "tm2d/fusion/generate.hpp"
#include "tm2d/motion/text.hpp"

using namespace tm2d;
using namespace tm2d::fusion;
using num::Tensor;

namespace {

FusionSchedule sched(double start, double dur) {
    FusionSchedule s;
    s.effect_start = start;
    s.effect_duration = dur;
    return s;
}

struct Models {
    vq::VqVaeModel vq;
    xm::XmodalModel xm;
};

Models tiny_models() {
    vq::VqVaeConfig vc;
    vc.hidden = 8;
    vc.latent_dim = 8;
    vc.codebook_size = 16;
    xm::XmConfig xc;
    xc.codebook_size = 16;
    xc.audio_dims = 16;
    xc.width = 16;
    xc.layers = 1;
    xc.heads = 2;
    return {vq::VqVaeModel(vc), xm::XmodalModel(xc)};
}

motion::AudioFeatureSeq eight_seconds() { return motion::synth_audio_features({0.5, 1.0, 1.5, 2.0}, 8.0, 7.5, 3); }

}  // namespace

TEST_CASE("fusion weight worked examples") {
    const auto s = sched(2.0, 10.0);
    const auto mid = fusion_weight(7.0, s);
    CHECK(mid.text == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(mid.audio == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(fusion_weight(1.9, s).text == 0.0);
    CHECK(fusion_weight(1.9, s).audio == 1.0);
    CHECK(fusion_weight(13.0, s).text == 0.0);
    CHECK(fusion_weight(3.0, s).text == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(fusion_weight(11.0, s).text == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("fusion weight: range, partition of unity, continuity, symmetry") {
    num::Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = sched(rng.uniform(0, 5), rng.uniform(0.5, 10));
        s.peak = rng.uniform(0.1, 1.0);
        s.ramp_fraction = rng.uniform(0.05, 0.5);
        double prev = fusion_weight(s.effect_start, s).text;
        CHECK(prev == 0.0);
        CHECK(fusion_weight(s.effect_end(), s).text == doctest::Approx(0.0));
        const int n = 2000;
        const double h = s.effect_duration / n;
        for (int i = 1; i <= n; ++i) {
            const double t = s.effect_start + i * h;
            const auto w = fusion_weight(t, s);
            CHECK(w.text >= 0.0);
            CHECK(w.text <= s.peak);
            CHECK(w.text + w.audio == doctest::Approx(1.0).epsilon(1e-15));
            // Lipschitz bound of a half-cosine ramp of height peak over r*D.
            CHECK(std::abs(w.text - prev) <= s.peak * std::numbers::pi / (2 * s.ramp_fraction * s.effect_duration) * h + 1e-12);
            prev = w.text;
            const double mirror = fusion_weight(s.effect_start + s.effect_end() - t, s).text;
            CHECK(w.text == doctest::Approx(mirror).epsilon(1e-9));
        }
    }
}

TEST_CASE("schedule validation") {
    auto s = sched(0, 1);
    s.peak = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.peak = 0.8;
    s.ramp_fraction = 0.6;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_THROWS_AS(sched(0, 0).validate(), RangeError);
}

TEST_CASE("fuse_features") {
    num::Rng rng(2);
    const auto a = testing::rand_tensor({1, 5}, rng);
    const auto t = testing::rand_tensor({1, 5}, rng);
    CHECK(testing::max_abs_diff(fuse_features(a, t, 0.0).data(), a.data()) == 0.0);
    CHECK(testing::max_abs_diff(fuse_features(a, t, 1.0).data(), t.data()) == 0.0);
    const auto f = fuse_features(Tensor::zeros({1, 3}), Tensor::full({1, 3}, 1.0), 0.8);
    for (double v : f.data()) {
        CHECK(v == doctest::Approx(0.8));
    }
    // Convexity: each coordinate lies between the two inputs.
    for (int trial = 0; trial < 50; ++trial) {
        const double w = rng.uniform();
        const auto g = fuse_features(a, t, w);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(g.data()[i] >= std::min(a.data()[i], t.data()[i]) - 1e-15);
            CHECK(g.data()[i] <= std::max(a.data()[i], t.data()[i]) + 1e-15);
        }
    }
    CHECK_THROWS_AS(fuse_features(Tensor::zeros({1, 3}), Tensor::zeros({1, 4}), 0.5), ShapeError);
}

TEST_CASE("top-k sampling") {
    num::Rng rng(3);
    const std::vector<double> logits = {0.1, 2.0, -1.0, 1.5};
    for (int i = 0; i < 20; ++i) {
        CHECK(sample_topk(logits, 1, rng) == 1);
    }
    std::vector<double> hot(8, 0.0);
    hot[5] = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 8; ++k) {
        CHECK(sample_topk(hot, k, rng) == 5);
    }
    const std::vector<double> flat(10, 0.3);
    std::vector<int> counts(10, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        ++counts[static_cast<std::size_t>(sample_topk(flat, 4, rng))];
    }
    for (std::size_t j = 0; j < 10; ++j) {
        if (j < 4) {
            CHECK(std::abs(counts[j] / double(draws) - 0.25) < 0.02);
        } else {
            CHECK(counts[j] == 0);
        }
    }
    // k = 2 on two dominant logits: frequencies follow the renormalized softmax.
    const std::vector<double> two = {std::log(3.0), 0.0, -50.0};
    int zeros = 0;
    for (int i = 0; i < draws; ++i) {
        zeros += sample_topk(two, 2, rng) == 0;
    }
    CHECK(std::abs(zeros / double(draws) - 0.75) < 0.02);
    CHECK_THROWS_AS(sample_topk(logits, 0, rng), RangeError);
    CHECK_THROWS_AS(sample_topk(logits, 5, rng), RangeError);
}

TEST_CASE("generate: lengths, ranges, determinism") {
    auto m = tiny_models();
    GenerationRequest req;
    req.audio = eight_seconds();
    req.seed = 4;
    const auto a = generate(m.vq, m.xm, 16, req);
    CHECK(a.tokens.size() == 60);
    CHECK(a.motion.frames == 480);
    CHECK(a.motion.fps == doctest::Approx(60.0));
    for (int t : a.tokens) {
        CHECK(t >= 0);
        CHECK(t < 16);
    }
    CHECK(num::all_finite(a.motion.data));
    const auto b = generate(m.vq, m.xm, 16, req);
    CHECK(a.tokens == b.tokens);
    CHECK(a.motion.data == b.motion.data);
    req.seed = 5;
    CHECK(generate(m.vq, m.xm, 16, req).tokens != a.tokens);
}

TEST_CASE("generate: text before its range changes nothing, zero-weight schedule collapses") {
    auto m = tiny_models();
    GenerationRequest base;
    base.audio = eight_seconds();
    base.seed = 11;
    const auto music = generate(m.vq, m.xm, 16, base);

    for (auto locus : {FusionLocus::kFeatures, FusionLocus::kProbabilities}) {
        auto req = base;
        req.locus = locus;
        req.text = TextInstruction{motion::tokenize_text("a person jumps", motion::Vocabulary::builtin()),
                                   sched(6.0, 2.0)};
        const auto mixed = generate(m.vq, m.xm, 16, req);
        for (std::size_t i = 0; i < 45; ++i) {
            CHECK(mixed.tokens[i] == music.tokens[i]);
            CHECK(mixed.text_weights[i] == 0.0);
        }
        // A range strictly between two token times yields w_text = 0 everywhere.
        req.text->schedule = sched(2.01, 0.1);
        CHECK(generate(m.vq, m.xm, 16, req).tokens == music.tokens);
    }
}

TEST_CASE("generate: contract errors") {
    auto m = tiny_models();
    GenerationRequest req;
    req.audio = eight_seconds();
    req.text = TextInstruction{motion::tokenize_text("a person jumps", motion::Vocabulary::builtin()), sched(7.0, 2.0)};
    CHECK_THROWS_AS(generate(m.vq, m.xm, 16, req), RangeError);
    req.text.reset();
    req.top_k = 17;
    CHECK_THROWS_AS(generate(m.vq, m.xm, 16, req), RangeError);
    req.top_k = 4;
    xm::XmConfig other;
    other.codebook_size = 8;
    other.width = 16;
    other.layers = 1;
    other.heads = 2;
    CHECK_THROWS_AS(generate(m.vq, xm::XmodalModel(other), 16, req), ConfigError);
    CHECK_THROWS_AS(fusion_locus_from_string("logits"), ConfigError);
    CHECK(fusion_locus_from_string("probabilities") == FusionLocus::kProbabilities);
}
