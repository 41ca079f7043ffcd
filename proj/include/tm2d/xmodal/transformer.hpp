#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tm2d/common/checkpoint.hpp"
#include "tm2d/motion/motion.hpp"
#include "tm2d/xmodal/layers.hpp"

namespace tm2d::xm {

enum class Branch { kMusic, kText };

const char* to_string(Branch b);

struct XmConfig {
    std::size_t codebook_size = 1024;  // K; the decoder embeds K + 1 ids (BOS = K)
    std::size_t audio_dims = 16;
    std::size_t text_vocab = 0;        // 0 = builtin vocabulary size
    std::size_t width = 64;
    std::size_t layers = 6;
    std::size_t heads = 4;
    std::size_t ff_hidden = 0;         // 0 = 4 * width
    std::size_t max_positions = 2048;
    std::uint64_t seed = 1;

    void validate() const;
};

// Encoder output plus the number of leading rows that are admissible keys.
struct CondFeatures {
    Tensor features;
    std::size_t valid = 0;
};

class XmodalModel {
public:
    explicit XmodalModel(XmConfig cfg);

    const XmConfig& config() const { return cfg_; }
    num::ParamSet& params() { return params_; }
    const num::ParamSet& params() const { return params_; }
    int bos() const { return static_cast<int>(cfg_.codebook_size); }

    // [T x d_a] -> [T x c].
    CondFeatures encode_audio(const Tensor& features) const;
    CondFeatures encode_audio(const motion::AudioFeatureSeq& audio) const;
    // [84 x c] with `valid` = text length. With `trim`, only the valid rows
    // (at least one) are computed; the rows that can be attended to are identical.
    CondFeatures encode_text(const motion::TextTokens& text, bool trim = false) const;

    // Decoder hidden states [m x c] after the final norm. Position i sees
    // tokens[0..i] and the admissible conditioning rows.
    Tensor decoder_features(std::span<const int> tokens, const CondFeatures& cond) const;
    // [m x c] -> [m x K] logits.
    Tensor project(const Tensor& features) const;
    Tensor decoder_forward(std::span<const int> tokens, const CondFeatures& cond) const;

    // "xm." tensors and hyperparameters.
    void save(Checkpoint& ckpt) const;
    static XmodalModel load(const Checkpoint& ckpt);

private:
    Tensor positions(std::size_t n) const;

    XmConfig cfg_;
    num::ParamSet params_;
    Tensor pe_;
    Linear audio_in_;
    Tensor text_table_;
    Tensor motion_table_;
    std::vector<EncoderBlock> audio_blocks_, text_blocks_;
    std::vector<DecoderBlock> decoder_blocks_;
    LayerNorm audio_norm_, text_norm_, decoder_norm_;
    Linear head_;
};

Tensor audio_tensor(const motion::AudioFeatureSeq& audio);

}  // namespace tm2d::xm
