#include "tm2d/fusion/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::fusion {

FusionLocus fusion_locus_from_string(const std::string& s) {
    if (s == "features") {
        return FusionLocus::kFeatures;
    }
    if (s == "probabilities") {
        return FusionLocus::kProbabilities;
    }
    throw ConfigError("unknown fusion locus '" + s + "' (expected features or probabilities)");
}

namespace {

std::vector<double> log_softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) {
        z += std::exp(v - m);
    }
    const double lz = m + std::log(z);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - lz;
    }
    return out;
}

// log(w_t * softmax(a) + w_a * softmax(b)), elementwise.
std::vector<double> mix_distributions(std::span<const double> text_logits, std::span<const double> audio_logits,
                                      double w_text) {
    const auto lt = log_softmax(text_logits);
    const auto la = log_softmax(audio_logits);
    std::vector<double> out(lt.size());
    for (std::size_t i = 0; i < lt.size(); ++i) {
        const double p = w_text * std::exp(lt[i]) + (1.0 - w_text) * std::exp(la[i]);
        out[i] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace

GenerationResult generate(const vq::VqVaeModel& vq, const xm::XmodalModel& model, std::size_t context,
                          const GenerationRequest& req) {
    const std::size_t K = model.config().codebook_size;
    if (vq.codebook().size() != K) {
        throw ConfigError("generate: VQ-VAE codebook has " + std::to_string(vq.codebook().size()) +
                          " entries but the transformer predicts " + std::to_string(K));
    }
    if (context == 0) {
        throw ConfigError("generate: context must be >= 1");
    }
    const auto& audio = req.audio;
    const std::size_t n = audio.frames;
    if (n == 0) {
        throw RangeError("generate: audio has no feature frames");
    }
    if (req.top_k == 0 || req.top_k > K) {
        throw RangeError("generate: top_k=" + std::to_string(req.top_k) + " outside [1, " + std::to_string(K) + "]");
    }
    if (req.text) {
        const auto& s = req.text->schedule;
        s.validate();
        const double slack = 1e-9;
        if (s.effect_start < 0.0 || s.effect_end() > audio.duration() + slack) {
            throw RangeError("generate: text effect range [" + std::to_string(s.effect_start) + ", " +
                             std::to_string(s.effect_end()) + "] s is outside the " +
                             std::to_string(audio.duration()) + " s audio");
        }
    }

    num::NoGradGuard guard;
    num::Rng rng(req.seed, 0x6e6);
    const Tensor audio_all = xm::audio_tensor(audio);
    std::optional<xm::CondFeatures> text_cond;

    GenerationResult out;
    out.tokens.reserve(n);
    out.text_weights.assign(n, 0.0);
    const auto used = vq.codebook().used_entries();
    if (used.empty()) {
        out.tokens.push_back(static_cast<int>(rng.below(static_cast<std::uint32_t>(K))));
    } else {
        out.tokens.push_back(used[rng.below(static_cast<std::uint32_t>(used.size()))]);
    }

    for (std::size_t i = 1; i < n; ++i) {
        // Window [s, s + W) mirrors a training crop; position i is its last query row.
        const std::size_t s = i + 1 > context ? i + 1 - context : 0;
        const std::size_t end = std::min(s + context, n);
        std::vector<int> input;
        input.reserve(i - s + 1);
        for (std::size_t p = s; p <= i; ++p) {
            input.push_back(p == 0 ? model.bos() : out.tokens[p - 1]);
        }
        const double t = static_cast<double>(i) / audio.rate;
        const double w_text = req.text ? fusion_weight(t, req.text->schedule).text : 0.0;
        out.text_weights[i] = w_text;

        const auto audio_cond = model.encode_audio(num::slice_rows(audio_all, s, end));
        const std::size_t last = input.size() - 1;
        const Tensor f_audio = num::slice_rows(model.decoder_features(input, audio_cond), last, last + 1);
        std::vector<double> logits;
        if (w_text > 0.0) {
            if (!text_cond) {
                text_cond = model.encode_text(req.text->tokens, true);
            }
            const Tensor f_text = num::slice_rows(model.decoder_features(input, *text_cond), last, last + 1);
            if (req.locus == FusionLocus::kFeatures) {
                const Tensor l = model.project(fuse_features(f_audio, f_text, w_text));
                logits.assign(l.data().begin(), l.data().end());
            } else {
                logits = mix_distributions(model.project(f_text).data(), model.project(f_audio).data(), w_text);
            }
        } else {
            const Tensor l = model.project(f_audio);
            logits.assign(l.data().begin(), l.data().end());
        }
        out.tokens.push_back(sample_topk(logits, req.top_k, rng));
    }
    out.motion = vq.decode_to_motion(out.tokens, audio.rate * static_cast<double>(vq::kDownsample));
    if (!num::all_finite(out.motion.data)) {
        throw NumericalError("generate: decoded motion contains non-finite values");
    }
    return out;
}

}  // namespace tm2d::fusion
