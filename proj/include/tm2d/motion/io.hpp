#pragma once

#include <string>

#include "tm2d/motion/motion.hpp"
#include "tm2d/motion/synth.hpp"

namespace tm2d::motion {

// TMOT v1: "TMOT v1 T d_m fps" then T lines of d_m decimals.
std::string format_motion(const MotionSequence& m);
MotionSequence parse_motion(const std::string& text, const std::string& origin = "<memory>");
void write_motion(const std::string& path, const MotionSequence& m);
MotionSequence read_motion(const std::string& path);

// TAUD v1: "TAUD v1 T d_a rate", "BEATS t1 t2 ...", then T lines of d_a decimals.
std::string format_audio(const AudioFeatureSeq& a);
AudioFeatureSeq parse_audio(const std::string& text, const std::string& origin = "<memory>");
void write_audio(const std::string& path, const AudioFeatureSeq& a);
AudioFeatureSeq read_audio(const std::string& path);

// Corpus manifest: "TM2DMAN v1 <dance|action> <n>" then one tab-separated
// record per item: motion=<path> audio=<path|-> text=<string|-> label=<label>.
// Paths are relative to the manifest's directory.
void write_corpus(const std::string& dir, const Corpus& corpus, const std::string& manifest_name = "manifest.txt");
Corpus read_corpus(const std::string& manifest_path);

}  // namespace tm2d::motion
