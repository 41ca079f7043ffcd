#include <doctest.h>

#include <cmath>

#include "gradcases.hpp"
#include "support.hpp"
#include "tm2d/common/errors.hpp"
#include "tm2d/motion/text.hpp"
#include "tm2d/numerics/grad_check.hpp"
#include "tm2d/xmodal/layers.hpp"
#include "tm2d/xmodal/train.hpp"
#include "tm2d/xmodal/transformer.hpp"

using namespace tm2d;
using namespace tm2d::xm;
using num::Tensor;

namespace {

XmConfig tiny(std::size_t K = 12) {
    XmConfig c;
    c.codebook_size = K;
    c.audio_dims = 4;
    c.width = 16;
    c.layers = 2;
    c.heads = 2;
    c.max_positions = 128;
    c.seed = 7;
    return c;
}

motion::TextTokens text_of(const std::string& s) { return motion::tokenize_text(s, motion::Vocabulary::builtin()); }

std::vector<int> random_tokens(num::Rng& rng, std::size_t n, std::size_t K) {
    std::vector<int> t(n);
    for (auto& v : t) {
        v = static_cast<int>(rng.below(static_cast<std::uint32_t>(K)));
    }
    return t;
}

}  // namespace

TEST_CASE("attention worked examples") {
    num::Rng rng(1);
    const auto v1 = testing::rand_tensor({1, 3}, rng);
    const auto out1 = attention(testing::rand_tensor({1, 2}, rng), testing::rand_tensor({1, 2}, rng), v1);
    CHECK(testing::max_abs_diff(out1.data(), v1.data()) < 1e-15);

    const auto k = Tensor::from({2, 2}, {0.3, -0.7, 0.3, -0.7});
    const auto v = Tensor::from({2, 2}, {1.0, 2.0, 3.0, 6.0});
    const auto out = attention(testing::rand_tensor({3, 2}, rng), k, v);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(out.at(i, 0) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(out.at(i, 1) == doctest::Approx(4.0).epsilon(1e-14));
    }

    // Causal: perturbing position 3 leaves rows 0..2 unchanged.
    auto q = testing::rand_tensor({5, 4}, rng);
    auto kk = testing::rand_tensor({5, 4}, rng);
    auto vv = testing::rand_tensor({5, 4}, rng);
    const auto a = attention(q, kk, vv, causal_mask(5));
    auto k2 = kk.clone();
    auto v2 = vv.clone();
    for (std::size_t c = 0; c < 4; ++c) {
        k2.mutable_data()[3 * 4 + c] += 1.0;
        v2.mutable_data()[3 * 4 + c] -= 2.0;
    }
    const auto b = attention(q, k2, v2, causal_mask(5));
    for (std::size_t i = 0; i < 3 * 4; ++i) {
        CHECK(a.data()[i] == b.data()[i]);
    }
    CHECK(a.data()[3 * 4] != b.data()[3 * 4]);
}

TEST_CASE("attention weights over admissible keys sum to one") {
    num::Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
        const std::size_t valid = rng.below(static_cast<std::uint32_t>(m + 1));
        const auto mask = prefix_mask(n, m, valid);
        // With V = identity the output rows are the attention weights.
        std::vector<double> eye(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            eye[i * m + i] = 1.0;
        }
        const auto w = attention(testing::rand_tensor({n, 3}, rng, 3.0), testing::rand_tensor({m, 3}, rng, 3.0),
                                 Tensor::from({m, m}, eye), mask);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (j >= valid) {
                    CHECK(w.at(i, j) == 0.0);
                }
                s += w.at(i, j);
            }
            CHECK(s == doctest::Approx(valid == 0 ? 0.0 : 1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("audio encoder: shape, positional sensitivity, gradient") {
    XmodalModel model(tiny());
    num::Rng rng(3);
    const auto feats = testing::rand_tensor({60, 4}, rng);
    const auto cond = model.encode_audio(feats);
    CHECK(cond.features.rows() == 60);
    CHECK(cond.features.cols() == 16);
    CHECK(cond.valid == 60);

    // Swap two frames: without positions the encoder would be permutation-equivariant.
    auto swapped = feats.clone();
    for (std::size_t c = 0; c < 4; ++c) {
        std::swap(swapped.mutable_data()[c], swapped.mutable_data()[4 + c]);
    }
    const auto other = model.encode_audio(swapped);
    double diff = 0.0;
    for (std::size_t c = 0; c < 16; ++c) {
        diff += std::abs(other.features.at(0, c) - cond.features.at(1, c));
    }
    CHECK(diff > 1e-6);

    const auto small = testing::rand_tensor({4, 4}, rng);
    const double err =
        num::grad_check([&](const auto& in) { return testing::probe(model.encode_audio(in[0]).features); }, {small});
    CHECK(err < 1e-4);
    CHECK_THROWS_AS(model.encode_audio(Tensor::zeros({4, 5})), ShapeError);
}

TEST_CASE("text encoder: padding mask and trimming") {
    XmodalModel model(tiny());
    const auto t = text_of("a person jumps");
    REQUIRE(t.length == 3);
    const auto cond = model.encode_text(t);
    CHECK(cond.features.rows() == motion::kMaxTextLength);
    CHECK(cond.valid == 3);

    auto altered = t;
    altered.ids[10] = 5;
    const auto cond2 = model.encode_text(altered);
    for (std::size_t i = 0; i < 3 * 16; ++i) {
        CHECK(cond.features.data()[i] == cond2.features.data()[i]);
    }
    const auto trimmed = model.encode_text(t, true);
    CHECK(testing::max_abs_diff(trimmed.features.data(), cond.features.data().subspan(0, trimmed.features.numel())) <
          1e-12);

    // All-PAD text: cross-attention has no key, decoding stays finite.
    const auto empty = model.encode_text(text_of(""));
    CHECK(empty.valid == 0);
    const std::vector<int> toks = {model.bos(), 3, 4};
    const auto logits = model.decoder_forward(toks, empty);
    CHECK(num::all_finite(logits.data()));
}

TEST_CASE("decoder causality and branch sharing") {
    XmodalModel model(tiny());
    num::Rng rng(4);
    const auto cond = model.encode_audio(testing::rand_tensor({10, 4}, rng));
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(8);
        auto a = random_tokens(rng, n, 12);
        auto b = a;
        const std::size_t pos = 1 + rng.below(static_cast<std::uint32_t>(n - 1));
        b[pos] = (b[pos] + 1 + static_cast<int>(rng.below(11))) % 12;
        const auto la = model.decoder_forward(a, cond);
        const auto lb = model.decoder_forward(b, cond);
        for (std::size_t i = 0; i < pos * 12; ++i) {
            CHECK(la.data()[i] == lb.data()[i]);
        }
    }
    // Appending a token leaves earlier logits unchanged.
    const std::vector<int> p = {model.bos(), 1, 2};
    const std::vector<int> q = {model.bos(), 1, 2, 5};
    const auto lp = model.decoder_forward(p, cond);
    const auto lq = model.decoder_forward(q, cond);
    CHECK(testing::max_abs_diff(lp.data(), lq.data().subspan(0, lp.numel())) == 0.0);

    // One decoder: a text-shaped conditioning equal to the audio one gives equal logits.
    CondFeatures same{cond.features.clone(), cond.valid};
    CHECK(testing::max_abs_diff(model.decoder_forward(p, same).data(), lp.data()) == 0.0);
}

TEST_CASE("toy full-model gradient check") { CHECK(testing::full_model_grad_error(16, 2) < 1e-3); }

TEST_CASE("crops and chunks") {
    const std::vector<int> toks = {5, 6, 7, 8, 9};
    const auto c0 = make_crop(toks, 0, 3, 99);
    CHECK(c0.input == std::vector<int>{99, 5, 6});
    CHECK(c0.target == std::vector<int>{5, 6, 7});
    const auto c2 = make_crop(toks, 2, 3, 99);
    CHECK(c2.input == std::vector<int>{6, 7, 8});
    CHECK(c2.target == std::vector<int>{7, 8, 9});
    CHECK_THROWS_AS(make_crop(toks, 3, 3, 99), RangeError);
    const auto chunks = context_chunks(toks, 2, 99);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[2].target == std::vector<int>{9});
    CHECK(chunks[1].input == std::vector<int>{6, 7});
}

TEST_CASE("checkpoint round trip reproduces logits") {
    XmodalModel model(tiny());
    Checkpoint ck;
    model.save(ck);
    const auto back = XmodalModel::load(ck);
    num::Rng rng(5);
    const auto cond = model.encode_audio(testing::rand_tensor({6, 4}, rng));
    const std::vector<int> toks = {model.bos(), 3, 1};
    CHECK(testing::max_abs_diff(model.decoder_forward(toks, cond).data(), back.decoder_forward(toks, cond).data()) ==
          0.0);
}

TEST_CASE("configuration errors") {
    auto c = tiny();
    c.heads = 3;
    CHECK_THROWS_AS(XmodalModel{c}, ConfigError);
    XmodalModel model(tiny());
    num::Rng rng(6);
    const auto cond = model.encode_audio(testing::rand_tensor({3, 4}, rng));
    CHECK_THROWS_AS(model.decoder_forward(std::vector<int>(200, 1), cond), RangeError);
    XmTrainConfig tc;
    CHECK_THROWS_AS(XmTrainer(XmodalModel(tiny()), {}, {}, tc), ConfigError);
}

TEST_CASE("single-pair overfit, determinism, and text-weight ablation") {
    num::Rng rng(8);
    std::vector<MusicPair> music;
    std::vector<TextPair> text;
    for (int i = 0; i < 2; ++i) {
        music.push_back({testing::rand_tensor({10, 4}, rng), random_tokens(rng, 10, 12)});
    }
    text.push_back({text_of("a person jumps up"), random_tokens(rng, 10, 12)});
    text.push_back({text_of("someone waves the left hand"), random_tokens(rng, 10, 12)});

    XmTrainConfig tc;
    tc.steps = 300;
    tc.batch = 2;
    tc.lr = 3e-3;
    tc.max_tokens = 10;
    std::vector<XmStepLog> log1, log2;
    const auto m1 = train_xmodal(tiny(), music, text, tc, &log1);
    const auto m2 = train_xmodal(tiny(), music, text, tc, &log2);
    REQUIRE(log1.size() == 300);
    CHECK(log1[0].branch == Branch::kMusic);
    CHECK(log1[1].branch == Branch::kText);
    for (std::size_t i = 0; i < log1.size(); ++i) {
        CHECK(log1[i].loss == log2[i].loss);
    }
    CHECK(teacher_forced_accuracy(m1, music, 10) == 1.0);
    CHECK(teacher_forced_accuracy(m1, text, 10) == 1.0);

    auto ablate = tc;
    ablate.text_weight = 0.0;
    const auto m0 = train_xmodal(tiny(), music, text, ablate);
    const double text_full = branch_loss(m1, text, 10), text_ablated = branch_loss(m0, text, 10);
    const double music_full = branch_loss(m1, music, 10), music_ablated = branch_loss(m0, music, 10);
    CAPTURE(text_full);
    CAPTURE(text_ablated);
    CAPTURE(music_full);
    CAPTURE(music_ablated);
    CHECK(text_ablated > text_full + 1.0);
    CHECK(music_ablated < 0.1);
}

TEST_CASE("trainer resumes bit-exactly") {
    num::Rng rng(9);
    std::vector<MusicPair> music = {{testing::rand_tensor({8, 4}, rng), random_tokens(rng, 8, 12)}};
    std::vector<TextPair> text = {{text_of("a person spins around"), random_tokens(rng, 8, 12)}};
    XmTrainConfig tc;
    tc.batch = 2;
    tc.lr = 1e-3;
    tc.max_tokens = 6;
    XmTrainer full(XmodalModel(tiny()), music, text, tc);
    full.run(10);
    XmTrainer part(XmodalModel(tiny()), music, text, tc);
    part.run(4);
    Checkpoint ck;
    part.save(ck);
    auto resumed = XmTrainer::resume(ck, music, text, tc);
    resumed.run(10);
    REQUIRE(resumed.log().size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(resumed.log()[i].loss == full.log()[4 + i].loss);
        CHECK(resumed.log()[i].branch == full.log()[4 + i].branch);
    }
}
