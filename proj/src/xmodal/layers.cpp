#include "tm2d/xmodal/layers.hpp"

#include <cmath>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::xm {

AttentionMask causal_mask(std::size_t n) {
    AttentionMask m(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            m[i * n + j] = 1;
        }
    }
    return m;
}

AttentionMask prefix_mask(std::size_t queries, std::size_t keys, std::size_t valid) {
    AttentionMask m(queries * keys, 0);
    for (std::size_t i = 0; i < queries; ++i) {
        for (std::size_t j = 0; j < std::min(valid, keys); ++j) {
            m[i * keys + j] = 1;
        }
    }
    return m;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::uint8_t> allowed) {
    if (q.cols() != k.cols() || k.rows() != v.rows()) {
        throw ShapeError("attention: Q " + num::shape_str(q.shape()) + ", K " + num::shape_str(k.shape()) + ", V " +
                         num::shape_str(v.shape()) + " are incompatible");
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    const Tensor scores = num::scale(num::matmul(q, num::transpose(k)), inv_sqrt);
    return num::matmul(num::masked_softmax_rows(scores, allowed), v);
}

Tensor sinusoidal_positions(std::size_t length, std::size_t width) {
    std::vector<double> pe(length * width);
    for (std::size_t p = 0; p < length; ++p) {
        for (std::size_t i = 0; i < width; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
            const double angle = static_cast<double>(p) * freq;
            pe[p * width + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from({length, width}, std::move(pe));
}

Linear::Linear(num::ParamSet& params, const std::string& name, std::size_t in, std::size_t out, num::Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = params.add(name + ".w", Tensor::uniform({in, out}, rng, -bound, bound));
    bias = params.add(name + ".b", Tensor::zeros({out}));
}

Tensor Linear::operator()(const Tensor& x) const { return num::add_bias(num::matmul(x, weight), bias); }

LayerNorm::LayerNorm(num::ParamSet& params, const std::string& name, std::size_t width) {
    gamma = params.add(name + ".g", Tensor::full({width}, 1.0));
    beta = params.add(name + ".b", Tensor::zeros({width}));
}

Tensor LayerNorm::operator()(const Tensor& x) const { return num::layer_norm(x, gamma, beta); }

MultiHeadAttention::MultiHeadAttention(num::ParamSet& params, const std::string& name, std::size_t width,
                                       std::size_t heads, num::Rng& rng)
    : heads_(heads) {
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    }
    q_ = Linear(params, name + ".q", width, width, rng);
    k_ = Linear(params, name + ".k", width, width, rng);
    v_ = Linear(params, name + ".v", width, width, rng);
    out_ = Linear(params, name + ".o", width, width, rng);
}

Tensor MultiHeadAttention::operator()(const Tensor& queries, const Tensor& keys_values,
                                      std::span<const std::uint8_t> allowed) const {
    const Tensor q = q_(queries);
    const Tensor k = k_(keys_values);
    const Tensor v = v_(keys_values);
    if (heads_ == 1) {
        return out_(attention(q, k, v, allowed));
    }
    const std::size_t hd = q.cols() / heads_;
    std::vector<Tensor> parts;
    parts.reserve(heads_);
    for (std::size_t h = 0; h < heads_; ++h) {
        parts.push_back(attention(num::slice_cols(q, h * hd, (h + 1) * hd), num::slice_cols(k, h * hd, (h + 1) * hd),
                                  num::slice_cols(v, h * hd, (h + 1) * hd), allowed));
    }
    return out_(num::concat_cols(parts));
}

FeedForward::FeedForward(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t hidden,
                         num::Rng& rng)
    : expand(params, name + ".fc1", width, hidden, rng), contract(params, name + ".fc2", hidden, width, rng) {}

Tensor FeedForward::operator()(const Tensor& x) const { return contract(num::relu(expand(x))); }

EncoderBlock::EncoderBlock(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t heads,
                           std::size_t ff_hidden, num::Rng& rng)
    : norm1_(params, name + ".ln1", width),
      norm2_(params, name + ".ln2", width),
      attn_(params, name + ".attn", width, heads, rng),
      ff_(params, name + ".ff", width, ff_hidden, rng) {}

Tensor EncoderBlock::operator()(const Tensor& x, std::span<const std::uint8_t> allowed) const {
    const Tensor h = norm1_(x);
    const Tensor y = num::add(x, attn_(h, h, allowed));
    return num::add(y, ff_(norm2_(y)));
}

DecoderBlock::DecoderBlock(num::ParamSet& params, const std::string& name, std::size_t width, std::size_t heads,
                           std::size_t ff_hidden, num::Rng& rng)
    : norm1_(params, name + ".ln1", width),
      norm2_(params, name + ".ln2", width),
      norm3_(params, name + ".ln3", width),
      self_attn_(params, name + ".self", width, heads, rng),
      cross_attn_(params, name + ".cross", width, heads, rng),
      ff_(params, name + ".ff", width, ff_hidden, rng) {}

Tensor DecoderBlock::operator()(const Tensor& x, const Tensor& cond, std::span<const std::uint8_t> self_allowed,
                                std::span<const std::uint8_t> cross_allowed) const {
    const Tensor h = norm1_(x);
    Tensor y = num::add(x, self_attn_(h, h, self_allowed));
    y = num::add(y, cross_attn_(norm2_(y), cond, cross_allowed));
    return num::add(y, ff_(norm3_(y)));
}

}  // namespace tm2d::xm
