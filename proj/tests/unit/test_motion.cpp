#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"
#include "tm2d/metrics/features.hpp"
#include "tm2d/metrics/fid.hpp"
#include "tm2d/motion/io.hpp"
#include "tm2d/motion/synth.hpp"
#include "tm2d/motion/text.hpp"

using namespace tm2d;
using namespace tm2d::motion;

namespace {

// Frequency (Hz) of the largest DFT magnitude of the mean-removed signal,
// scanned on a fine grid so the peak is not limited to 1/T bins.
double dominant_frequency(const std::vector<double>& x, double fps, double lo, double hi) {
    double mu = 0.0;
    for (double v : x) {
        mu += v;
    }
    mu /= static_cast<double>(x.size());
    double best_f = lo, best = -1.0;
    for (double f = lo; f <= hi; f += 0.001) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double ph = 2.0 * std::numbers::pi * f * static_cast<double>(t) / fps;
            re += (x[t] - mu) * std::cos(ph);
            im += (x[t] - mu) * std::sin(ph);
        }
        const double mag = re * re + im * im;
        if (mag > best) {
            best = mag;
            best_f = f;
        }
    }
    return best_f;
}

}  // namespace

TEST_CASE("dance corpus: contract and determinism") {
    const auto a = synth_dance_corpus(100, 11);
    CHECK(a.items.size() == 100);
    CHECK(a.provenance == Provenance::kDance);
    for (const auto& it : a.items) {
        CHECK(it.audio.has_value());
        CHECK(!it.text.has_value());
        it.motion.validate();
        CHECK(it.audio->rate == doctest::Approx(it.motion.fps / 8.0));
    }
    CHECK_NOTHROW(a.validate());
    const auto b = synth_dance_corpus(1, 5);
    const auto c = synth_dance_corpus(1, 5);
    CHECK(format_motion(b.items[0].motion) == format_motion(c.items[0].motion));
    CHECK(format_audio(*b.items[0].audio) == format_audio(*c.items[0].audio));
}

TEST_CASE("dance oscillation follows the music tempo") {
    const auto corpus = synth_dance_corpus(5, 21);
    for (const auto& it : corpus.items) {
        const auto& beats = it.audio->beat_times;
        REQUIRE(beats.size() >= 3);
        const double tempo = static_cast<double>(beats.size() - 1) / (beats.back() - beats.front());
        std::vector<double> root_y(it.motion.frames);
        for (std::size_t t = 0; t < it.motion.frames; ++t) {
            root_y[t] = it.motion.at(t, kRoot, 1);
        }
        const double f = dominant_frequency(root_y, it.motion.fps, 0.5, 4.0);
        CHECK(std::abs(f - tempo) / tempo < 0.05);
    }
}

TEST_CASE("action corpus: contract and jump excursion") {
    const auto a = synth_action_corpus(30, 3);
    for (const auto& it : a.items) {
        CHECK(it.text.has_value());
        CHECK(!it.audio.has_value());
        it.motion.validate();
    }
    std::string text;
    const auto jump = synth_action("jump", 4.0, 9, SynthConfig{}, &text);
    CHECK(!text.empty());
    const double rest_y = rest_pose()[kRoot * 3 + 1];
    bool above = false;
    for (std::size_t t = 0; t < jump.frames; ++t) {
        above = above || jump.at(t, kRoot, 1) > rest_y + 0.05;
    }
    CHECK(above);
    CHECK_THROWS_AS(synth_action("levitate", 2.0, 1, SynthConfig{}), ConfigError);
}

TEST_CASE("dance and action corpora are distribution-distinct") {
    const auto dance = synth_dance_corpus(100, 1);
    const auto action = synth_action_corpus(100, 2);
    std::vector<metrics::FeatureVector> fd, fa, split_a, split_b;
    for (std::size_t i = 0; i < 100; ++i) {
        fd.push_back(metrics::kinetic_features(dance.items[i].motion));
        fa.push_back(metrics::kinetic_features(action.items[i].motion));
        (i % 2 == 0 ? split_a : split_b).push_back(fd.back());
    }
    const double cross = metrics::fid(fd, fa);
    const double within = metrics::fid(split_a, split_b);
    CAPTURE(cross);
    CAPTURE(within);
    CHECK(cross > 3.0 * within);
}

TEST_CASE("window_motion counts and bounds") {
    MotionSequence m(128, kMotionWidth, 60.0);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        m.data[i] = static_cast<double>(i);
    }
    const auto w = window_motion(m, 64, 16);
    CHECK(w.size() == 5);
    CHECK(w[1].data[0] == m.at(16, 0, 0));
    const auto one = window_motion(m.slice(0, 64), 64, 7);
    REQUIRE(one.size() == 1);
    CHECK(one[0].data == m.slice(0, 64).data);
    CHECK_THROWS_AS(window_motion(m.slice(0, 63), 64, 16), RangeError);
}

TEST_CASE("tokenize_text") {
    const Vocabulary v({{"a", 2}, {"person", 3}, {"jumps", 4}});
    const auto t = tokenize_text("A person jumps.", v);
    CHECK(t.length == 3);
    REQUIRE(t.ids.size() == kMaxTextLength);
    CHECK(t.ids[0] == 2);
    CHECK(t.ids[1] == 3);
    CHECK(t.ids[2] == 4);
    for (std::size_t i = 3; i < kMaxTextLength; ++i) {
        CHECK(t.ids[i] == kPadId);
    }
    const auto empty = tokenize_text("", v);
    CHECK(empty.length == 0);
    CHECK(empty.ids == std::vector<int>(kMaxTextLength, kPadId));
    std::string long_text;
    for (int i = 0; i < 100; ++i) {
        long_text += "person ";
    }
    CHECK(tokenize_text(long_text, v).length == kMaxTextLength);
    CHECK(tokenize_text("unicorn", v).ids[0] == kUnkId);
    // Every word of the generated descriptions is in the builtin vocabulary.
    for (const auto& it : synth_action_corpus(40, 8).items) {
        const auto tok = tokenize_text(*it.text, Vocabulary::builtin());
        for (std::size_t i = 0; i < tok.length; ++i) {
            CHECK(tok.ids[i] != kUnkId);
        }
    }
}

TEST_CASE("synthetic audio features") {
    const auto none = synth_audio_features({}, 8.0, 7.5, 1);
    CHECK(none.frames == 60);
    for (std::size_t t = 0; t < none.frames; ++t) {
        CHECK(none.frame(t)[0] == 0.0);
    }
    const auto a = synth_audio_features({0.5, 1.0}, 8.0, 7.5, 1);
    for (std::size_t t = 0; t < a.frames; ++t) {
        const bool beat = t == 4 || t == 8;
        CHECK(a.frame(t)[0] == (beat ? 1.0 : 0.0));
    }
    CHECK_THROWS_AS(synth_audio_features({9.0}, 8.0, 7.5, 1), RangeError);
}

TEST_CASE("file formats round-trip and reject corruption") {
    const auto dir = testing::scratch_dir("motion_io");
    auto corpus = synth_dance_corpus(3, 4);
    write_corpus(dir.string(), corpus);
    const auto back = read_corpus((dir / "manifest.txt").string());
    REQUIRE(back.items.size() == 3);
    CHECK(back.provenance == Provenance::kDance);
    CHECK(back.items[1].motion.data == corpus.items[1].motion.data);
    CHECK(back.items[1].audio->beat_times == corpus.items[1].audio->beat_times);
    CHECK(back.items[1].audio->data == corpus.items[1].audio->data);

    auto action = synth_action_corpus(2, 4);
    write_corpus((dir / "act").string(), action);
    const auto aback = read_corpus((dir / "act" / "manifest.txt").string());
    CHECK(*aback.items[0].text == *action.items[0].text);

    CHECK_THROWS_AS(parse_motion("TMOT v2 1 3 60\n0 0 0\n"), FormatError);
    CHECK_THROWS_AS(parse_motion("TMOT v1 2 3 60\n0 0 0\n"), FormatError);
    CHECK_THROWS_AS(parse_motion("TMOT v1 1 3 60\n0 0\n"), FormatError);
    CHECK_THROWS(read_motion((dir / "missing.tmot").string()));
    CorpusItem both = corpus.items[0];
    both.text = "a person jumps";
    corpus.items.push_back(both);
    CHECK_THROWS_AS(corpus.validate(), ContractError);
}

TEST_CASE("motion invariants") {
    MotionSequence m(2, 6, 60.0);
    CHECK_NOTHROW(m.validate());
    m.data[3] = std::nan("");
    CHECK_THROWS_AS(m.validate(), ContractError);
    MotionSequence bad(2, 5, 60.0);
    CHECK_THROWS_AS(bad.validate(), ContractError);
    CHECK_THROWS_AS(MotionSequence(3, 6, 60.0).slice(2, 4), RangeError);
}
