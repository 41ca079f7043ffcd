#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tm2d/common/checkpoint.hpp"
#include "tm2d/motion/motion.hpp"
#include "tm2d/motion/synth.hpp"
#include "tm2d/numerics/params.hpp"
#include "tm2d/numerics/tensor.hpp"

namespace tm2d::vq {

using num::Tensor;
using TokenSequence = std::vector<int>;

inline constexpr std::size_t kDownsample = 8;

struct VqVaeConfig {
    std::size_t motion_width = motion::kMotionWidth;
    std::size_t hidden = 64;
    std::size_t latent_dim = 128;       // d
    std::size_t codebook_size = 1024;   // K
    double beta = 0.25;
    bool use_bias = true;
    std::uint64_t seed = 1;

    void validate() const;
};

// K x d table plus per-corpus token-usage counters.
struct Codebook {
    Tensor entries;
    std::map<std::string, std::vector<std::uint64_t>> usage_counts;

    std::size_t size() const { return entries.rows(); }
    std::size_t dim() const { return entries.cols(); }
    // Adds the occurrences of `tokens` to the counters of `corpus`.
    void record_usage(const std::string& corpus, const TokenSequence& tokens);
    // Entries used by any corpus so far, ascending.
    std::vector<int> used_entries() const;
};

struct Quantized {
    Tensor z_q;            // T' x d; rows are codebook entries (differentiable w.r.t. the codebook)
    TokenSequence tokens;  // T'
};

// tokens[i] = argmin_j ||z_i - e_j||_2 with ties resolved to the lowest index.
Quantized quantize(const Tensor& z, const Tensor& codebook);

struct VqLoss {
    Tensor total;
    double reconstruction = 0.0;
    double codebook = 0.0;
    double commitment = 0.0;
};

// mean|m_hat - m| + mean_t ||sg[z_t] - z_q,t||^2 + beta * mean_t ||z_t - sg[z_q,t]||^2
VqLoss vq_loss(const Tensor& m, const Tensor& m_hat, const Tensor& z, const Tensor& z_q, double beta);

class VqVaeModel {
public:
    explicit VqVaeModel(const VqVaeConfig& cfg);

    const VqVaeConfig& config() const { return cfg_; }
    num::ParamSet& params() { return params_; }
    const num::ParamSet& params() const { return params_; }
    Codebook& codebook() { return codebook_; }
    const Codebook& codebook() const { return codebook_; }

    // [T x d_m] -> [T/8 x d]; T must be a positive multiple of 8.
    Tensor encode(const Tensor& motion) const;
    Tensor encode(const motion::MotionSequence& m) const;
    // [T' x d] -> [8T' x d_m].
    Tensor decode(const Tensor& z_q) const;
    Tensor decode_tokens(const TokenSequence& tokens) const;
    motion::MotionSequence decode_to_motion(const TokenSequence& tokens, double fps) const;
    // Tokens of a whole motion (no graph recorded).
    TokenSequence tokenize(const motion::MotionSequence& m) const;

    struct Forward {
        Tensor z;
        Quantized quantized;
        Tensor reconstruction;
        VqLoss loss;
    };
    // Encoder -> quantizer -> straight-through -> decoder -> loss.
    Forward forward(const Tensor& motion) const;

    // "vq." tensors plus "vq.*" hyperparameters and usage counters.
    void save(Checkpoint& ckpt) const;
    static VqVaeModel load(const Checkpoint& ckpt);

private:
    VqVaeConfig cfg_;
    num::ParamSet params_;
    Codebook codebook_;
    std::vector<Tensor> enc_w_, enc_b_, dec_w_, dec_b_;
};

Tensor motion_tensor(const motion::MotionSequence& m);
motion::MotionSequence tensor_motion(const Tensor& t, double fps);

// Tokenizes every motion (truncated to a multiple of 8 frames) and adds the
// tokens to the usage counters under the corpus' provenance tag.
std::vector<TokenSequence> tokenize_corpus(VqVaeModel& model, const motion::Corpus& corpus);

// Token stream file: "TTOK v1 K" then the tokens separated by spaces.
std::string format_tokens(const TokenSequence& tokens, std::size_t K);
TokenSequence parse_tokens(const std::string& text, std::size_t* K = nullptr);

}  // namespace tm2d::vq
