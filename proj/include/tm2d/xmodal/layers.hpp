#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tm2d/numerics/params.hpp"
#include "tm2d/numerics/rng.hpp"
#include "tm2d/numerics/tensor.hpp"

namespace tm2d::xm {

using num::Tensor;

// Row-major [queries x keys] admission mask; empty means every pair allowed.
using AttentionMask = std::vector<std::uint8_t>;

AttentionMask causal_mask(std::size_t n);
// Every query may see exactly the first `valid` of `keys` positions.
AttentionMask prefix_mask(std::size_t queries, std::size_t keys, std::size_t valid);

// softmax(Q K^T / sqrt(c)) V with c the width of Q. Blocked pairs get zero
// weight; a query with no admissible key produces a zero row.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::uint8_t> allowed = {});

// Fixed sinusoidal table [length x width].
Tensor sinusoidal_positions(std::size_t length, std::size_t width);

struct Linear {
    Tensor weight;  // in x out
    Tensor bias;    // out

    Linear() = default;
    Linear(num::ParamSet& params, const std::string& name, std::size_t in, std::size_t out, num::Rng& rng);
    Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;

    LayerNorm() = default;
    LayerNorm(num::ParamSet& params, const std::string& name, std::size_t width);
    Tensor operator()(const Tensor& x) const;
};

class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t heads,
                       num::Rng& rng);

    Tensor operator()(const Tensor& queries, const Tensor& keys_values, std::span<const std::uint8_t> allowed) const;

private:
    std::size_t heads_ = 1;
    Linear q_, k_, v_, out_;
};

struct FeedForward {
    Linear expand;
    Linear contract;

    FeedForward() = default;
    FeedForward(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t hidden, num::Rng& rng);
    Tensor operator()(const Tensor& x) const;
};

// Pre-norm self-attention block.
class EncoderBlock {
public:
    EncoderBlock() = default;
    EncoderBlock(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t heads,
                 std::size_t ff_hidden, num::Rng& rng);
    Tensor operator()(const Tensor& x, std::span<const std::uint8_t> allowed) const;

private:
    LayerNorm norm1_, norm2_;
    MultiHeadAttention attn_;
    FeedForward ff_;
};

// Pre-norm decoder block: masked self-attention, cross-attention to the
// conditioning sequence, feed-forward; each sub-layer residual.
class DecoderBlock {
public:
    DecoderBlock() = default;
    DecoderBlock(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t heads,
                 std::size_t ff_hidden, num::Rng& rng);
    Tensor operator()(const Tensor& x, const Tensor& cond, std::span<const std::uint8_t> self_allowed,
                      std::span<const std::uint8_t> cross_allowed) const;

private:
    LayerNorm norm1_, norm2_, norm3_;
    MultiHeadAttention self_attn_, cross_attn_;
    FeedForward ff_;
};

}  // namespace tm2d::xm
