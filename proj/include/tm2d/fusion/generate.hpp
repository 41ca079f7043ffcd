#pragma once

#include <optional>
#include <vector>

#include "tm2d/fusion/fusion.hpp"
#include "tm2d/motion/motion.hpp"
#include "tm2d/vqvae/vqvae.hpp"
#include "tm2d/xmodal/transformer.hpp"

namespace tm2d::fusion {

// Where the two branches meet: decoder features before the shared output
// projection, or the two next-token distributions after it.
enum class FusionLocus { kFeatures, kProbabilities };

FusionLocus fusion_locus_from_string(const std::string& s);

struct TextInstruction {
    motion::TextTokens tokens;
    FusionSchedule schedule;
};

struct GenerationRequest {
    motion::AudioFeatureSeq audio;
    std::optional<TextInstruction> text;
    std::size_t top_k = 10;
    std::uint64_t seed = 1;
    FusionLocus locus = FusionLocus::kFeatures;
};

struct GenerationResult {
    vq::TokenSequence tokens;
    motion::MotionSequence motion;
    // Text weight used for each token (0 for music-only requests).
    std::vector<double> text_weights;
};

// Token i sits at time i / audio.rate. Token 0 is drawn uniformly from the
// codebook entries used in training; every later token is top-k sampled
// from the (fused) decoder output over the last `context` positions.
GenerationResult generate(const vq::VqVaeModel& vq, const xm::XmodalModel& model, std::size_t context,
                          const GenerationRequest& req);

}  // namespace tm2d::fusion
