#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tm2d/motion/motion.hpp"

namespace tm2d::motion {

enum class Provenance { kDance, kAction };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct CorpusItem {
    MotionSequence motion;
    std::optional<AudioFeatureSeq> audio;
    std::optional<std::string> text;
    std::string label;
};

struct Corpus {
    Provenance provenance = Provenance::kDance;
    std::vector<CorpusItem> items;

    // Dance items carry audio only, action items text only.
    void validate() const;
};

struct SynthConfig {
    double fps = 60.0;
    std::size_t downsample = 8;  // motion frames per token
    std::size_t audio_dims = 16;
    double dance_min_seconds = 6.0;
    double dance_max_seconds = 12.0;
    double action_min_seconds = 2.0;
    double action_max_seconds = 10.0;
    double min_tempo_hz = 1.0;
    double max_tempo_hz = 3.0;

    double token_rate() const { return fps / static_cast<double>(downsample); }
};

Corpus synth_dance_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg = {});
Corpus synth_action_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg = {});

// Action primitive names, in generation order.
const std::vector<std::string>& action_primitives();
// One motion of the named primitive; `text` receives its description.
MotionSequence synth_action(const std::string& primitive, double seconds, std::uint64_t seed, const SynthConfig& cfg,
                            std::string* text = nullptr);

AudioFeatureSeq synth_audio_features(const std::vector<double>& beat_times, double duration, double rate,
                                     std::uint64_t seed, std::size_t dims = 16);

// floor((T - window) / stride) + 1 windows of exactly `window` frames.
std::vector<MotionSequence> window_motion(const MotionSequence& m, std::size_t window = 64, std::size_t stride = 16);

}  // namespace tm2d::motion
