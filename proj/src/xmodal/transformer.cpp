#include "tm2d/xmodal/transformer.hpp"

#include <algorithm>

#include "tm2d/common/errors.hpp"
#include "tm2d/motion/text.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::xm {

const char* to_string(Branch b) { return b == Branch::kMusic ? "music2dance" : "text2motion"; }

void XmConfig::validate() const {
    if (codebook_size == 0 || audio_dims == 0 || width == 0 || layers == 0) {
        throw ConfigError("xm: codebook_size, audio_dims, width and layers must be positive");
    }
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("xm: width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                          " heads");
    }
}

namespace {

XmConfig resolved(XmConfig cfg) {
    if (cfg.text_vocab == 0) {
        cfg.text_vocab = motion::Vocabulary::builtin().size();
    }
    if (cfg.ff_hidden == 0) {
        cfg.ff_hidden = 4 * cfg.width;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

XmodalModel::XmodalModel(XmConfig cfg) : cfg_(resolved(cfg)) {
    num::Rng rng(cfg_.seed, 0x3c3);
    const std::size_t c = cfg_.width;
    pe_ = sinusoidal_positions(cfg_.max_positions, c);
    audio_in_ = Linear(params_, "audio.in", cfg_.audio_dims, c, rng);
    text_table_ = params_.add("text.embed", Tensor::randn({cfg_.text_vocab, c}, rng, 1.0));
    motion_table_ = params_.add("motion.embed", Tensor::randn({cfg_.codebook_size + 1, c}, rng, 1.0));
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        audio_blocks_.emplace_back(params_, "audio.block" + std::to_string(l), c, cfg_.heads, cfg_.ff_hidden, rng);
    }
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        text_blocks_.emplace_back(params_, "text.block" + std::to_string(l), c, cfg_.heads, cfg_.ff_hidden, rng);
    }
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        decoder_blocks_.emplace_back(params_, "dec.block" + std::to_string(l), c, cfg_.heads, cfg_.ff_hidden, rng);
    }
    audio_norm_ = LayerNorm(params_, "audio.norm", c);
    text_norm_ = LayerNorm(params_, "text.norm", c);
    decoder_norm_ = LayerNorm(params_, "dec.norm", c);
    head_ = Linear(params_, "dec.head", c, cfg_.codebook_size, rng);
}

Tensor XmodalModel::positions(std::size_t n) const {
    if (n > cfg_.max_positions) {
        throw RangeError("xm: sequence of " + std::to_string(n) + " exceeds max_positions " +
                         std::to_string(cfg_.max_positions));
    }
    return num::slice_rows(pe_, 0, n);
}

CondFeatures XmodalModel::encode_audio(const Tensor& features) const {
    if (features.rank() != 2 || features.cols() != cfg_.audio_dims) {
        throw ShapeError("encode_audio: expected [T x " + std::to_string(cfg_.audio_dims) + "], got " +
                         num::shape_str(features.shape()));
    }
    Tensor x = num::add(audio_in_(features), positions(features.rows()));
    for (const auto& block : audio_blocks_) {
        x = block(x, {});
    }
    return {audio_norm_(x), features.rows()};
}

CondFeatures XmodalModel::encode_audio(const motion::AudioFeatureSeq& audio) const {
    return encode_audio(audio_tensor(audio));
}

CondFeatures XmodalModel::encode_text(const motion::TextTokens& text, bool trim) const {
    const std::size_t valid = std::min(text.length, text.ids.size());
    const std::size_t rows = trim ? std::max<std::size_t>(valid, 1) : text.ids.size();
    if (rows == 0) {
        throw ShapeError("encode_text: empty token array");
    }
    const std::span<const int> ids(text.ids.data(), rows);
    Tensor x = num::add(num::embedding(text_table_, ids), positions(rows));
    const AttentionMask mask = prefix_mask(rows, rows, valid);
    for (const auto& block : text_blocks_) {
        x = block(x, mask);
    }
    return {text_norm_(x), valid};
}

Tensor XmodalModel::decoder_features(std::span<const int> tokens, const CondFeatures& cond) const {
    const std::size_t m = tokens.size();
    if (m == 0) {
        throw ShapeError("decoder_forward: empty token prefix");
    }
    Tensor x = num::add(num::embedding(motion_table_, tokens), positions(m));
    const AttentionMask self_mask = causal_mask(m);
    const AttentionMask cross_mask = prefix_mask(m, cond.features.rows(), cond.valid);
    for (const auto& block : decoder_blocks_) {
        x = block(x, cond.features, self_mask, cross_mask);
    }
    return decoder_norm_(x);
}

Tensor XmodalModel::project(const Tensor& features) const { return head_(features); }

Tensor XmodalModel::decoder_forward(std::span<const int> tokens, const CondFeatures& cond) const {
    return project(decoder_features(tokens, cond));
}

void XmodalModel::save(Checkpoint& ckpt) const {
    ckpt.set("xm.K", cfg_.codebook_size);
    ckpt.set("xm.audio_dims", cfg_.audio_dims);
    ckpt.set("xm.text_vocab", cfg_.text_vocab);
    ckpt.set("xm.width", cfg_.width);
    ckpt.set("xm.layers", cfg_.layers);
    ckpt.set("xm.heads", cfg_.heads);
    ckpt.set("xm.ff_hidden", cfg_.ff_hidden);
    ckpt.set("xm.max_positions", cfg_.max_positions);
    ckpt.set("xm.seed", static_cast<long long>(cfg_.seed));
    params_.save(ckpt, "xm.");
}

XmodalModel XmodalModel::load(const Checkpoint& ckpt) {
    const auto get = [&](const char* key) { return static_cast<std::size_t>(ckpt.get_int(key)); };
    XmConfig cfg;
    cfg.codebook_size = get("xm.K");
    cfg.audio_dims = get("xm.audio_dims");
    cfg.text_vocab = get("xm.text_vocab");
    cfg.width = get("xm.width");
    cfg.layers = get("xm.layers");
    cfg.heads = get("xm.heads");
    cfg.ff_hidden = get("xm.ff_hidden");
    cfg.max_positions = get("xm.max_positions");
    cfg.seed = static_cast<std::uint64_t>(ckpt.get_int("xm.seed"));
    XmodalModel model(cfg);
    model.params_.load(ckpt, "xm.");
    return model;
}

Tensor audio_tensor(const motion::AudioFeatureSeq& audio) { return Tensor::from({audio.frames, audio.dims}, audio.data); }

}  // namespace tm2d::xm
