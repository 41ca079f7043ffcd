#include "tm2d/vqvae/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::vq {

namespace {

constexpr std::size_t kEncoderLevels = 3;
constexpr std::size_t kDownKernel = 4;
constexpr std::size_t kKernel = 3;

// He-uniform: keeps activation scale through the ReLU stack.
Tensor init_kernel(num::Rng& rng, std::size_t w, std::size_t ci, std::size_t co) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w * ci));
    return Tensor::uniform({w, ci, co}, rng, -bound, bound);
}


Tensor rows_mean_sqnorm(const Tensor& x) {
    return num::scale(num::sum_squares(x), 1.0 / static_cast<double>(x.rows()));
}

}  // namespace

void VqVaeConfig::validate() const {
    if (motion_width == 0 || motion_width % 3 != 0) {
        throw ConfigError("vq: motion width must be a positive multiple of 3");
    }
    if (hidden == 0 || latent_dim == 0 || codebook_size == 0) {
        throw ConfigError("vq: hidden, latent_dim and codebook_size must be positive");
    }
    if (!(beta >= 0.0)) {
        throw ConfigError("vq: beta must be >= 0");
    }
}

void Codebook::record_usage(const std::string& corpus, const TokenSequence& tokens) {
    auto& counts = usage_counts[corpus];
    counts.resize(size(), 0);
    for (int t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= size()) {
            throw IndexError("token " + std::to_string(t) + " outside codebook of " + std::to_string(size()));
        }
        ++counts[static_cast<std::size_t>(t)];
    }
}

std::vector<int> Codebook::used_entries() const {
    std::vector<int> used;
    for (std::size_t k = 0; k < size(); ++k) {
        for (const auto& [name, counts] : usage_counts) {
            if (k < counts.size() && counts[k] > 0) {
                used.push_back(static_cast<int>(k));
                break;
            }
        }
    }
    return used;
}

Quantized quantize(const Tensor& z, const Tensor& codebook) {
    const std::size_t n = z.rows(), d = z.cols();
    const std::size_t K = codebook.rows();
    if (codebook.cols() != d) {
        throw ShapeError("quantize: latent width " + std::to_string(d) + " != codebook width " +
                         std::to_string(codebook.cols()));
    }
    const auto zv = z.data();
    const auto ev = codebook.data();
    Quantized q;
    q.tokens.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* zi = zv.data() + i * d;
        double best = std::numeric_limits<double>::infinity();
        int best_j = 0;
        for (std::size_t j = 0; j < K; ++j) {
            const double* ej = ev.data() + j * d;
            double dist = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = zi[c] - ej[c];
                dist += diff * diff;
            }
            if (dist < best) {  // strict: earlier index wins ties
                best = dist;
                best_j = static_cast<int>(j);
            }
        }
        q.tokens[i] = best_j;
    }
    q.z_q = num::embedding(codebook, q.tokens);
    return q;
}

VqLoss vq_loss(const Tensor& m, const Tensor& m_hat, const Tensor& z, const Tensor& z_q, double beta) {
    if (beta < 0.0) {
        throw ConfigError("vq_loss: beta must be >= 0, got " + std::to_string(beta));
    }
    if (z.shape() != z_q.shape()) {
        throw ShapeError("vq_loss: z " + num::shape_str(z.shape()) + " vs z_q " + num::shape_str(z_q.shape()));
    }
    const Tensor recon = num::l1_loss(m_hat, m);
    const Tensor book = rows_mean_sqnorm(num::sub(z.detach(), z_q));
    const Tensor commit = rows_mean_sqnorm(num::sub(z, z_q.detach()));
    VqLoss out;
    out.total = num::add(num::add(recon, book), num::scale(commit, beta));
    out.reconstruction = recon.item();
    out.codebook = book.item();
    out.commitment = commit.item();
    return out;
}

VqVaeModel::VqVaeModel(const VqVaeConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    num::Rng rng(cfg.seed, 0x7a3e);
    const std::size_t h = cfg.hidden;

    std::size_t in = cfg.motion_width;
    for (std::size_t l = 0; l < kEncoderLevels; ++l) {
        const std::string name = "enc.down" + std::to_string(l);
        enc_w_.push_back(params_.add(name + ".w", init_kernel(rng, kDownKernel, in, h)));
        if (cfg.use_bias) {
            enc_b_.push_back(params_.add(name + ".b", Tensor::zeros({h})));
        }
        in = h;
    }
    enc_w_.push_back(params_.add("enc.proj.w", init_kernel(rng, 1, h, cfg.latent_dim)));
    if (cfg.use_bias) {
        enc_b_.push_back(params_.add("enc.proj.b", Tensor::zeros({cfg.latent_dim})));
    }

    dec_w_.push_back(params_.add("dec.in.w", init_kernel(rng, kKernel, cfg.latent_dim, h)));
    if (cfg.use_bias) {
        dec_b_.push_back(params_.add("dec.in.b", Tensor::zeros({h})));
    }
    for (std::size_t l = 0; l < kEncoderLevels; ++l) {
        const std::string name = "dec.up" + std::to_string(l);
        dec_w_.push_back(params_.add(name + ".w", init_kernel(rng, kKernel, h, h)));
        if (cfg.use_bias) {
            dec_b_.push_back(params_.add(name + ".b", Tensor::zeros({h})));
        }
    }
    dec_w_.push_back(params_.add("dec.out.w", init_kernel(rng, kKernel, h, cfg.motion_width)));
    if (cfg.use_bias) {
        dec_b_.push_back(params_.add("dec.out.b", Tensor::zeros({cfg.motion_width})));
    }

    const double bound = 1.0 / static_cast<double>(cfg.codebook_size);
    codebook_.entries = params_.add("codebook",
                                    Tensor::uniform({cfg.codebook_size, cfg.latent_dim}, rng, -bound, bound));
}

Tensor VqVaeModel::encode(const Tensor& motion) const {
    const std::size_t T = motion.rows();
    if (motion.cols() != cfg_.motion_width) {
        throw ShapeError("encode: motion width " + std::to_string(motion.cols()) + " != " +
                         std::to_string(cfg_.motion_width));
    }
    if (T == 0 || T % kDownsample != 0) {
        throw ShapeError("encode: T=" + std::to_string(T) + " is not a positive multiple of " +
                         std::to_string(kDownsample));
    }
    auto bias = [&](std::size_t i) { return cfg_.use_bias ? enc_b_[i] : Tensor{}; };
    Tensor x = motion;
    for (std::size_t l = 0; l < kEncoderLevels; ++l) {
        x = num::relu(num::conv1d(x, enc_w_[l], bias(l), {.stride = 2, .padding = 1}));
    }
    return num::conv1d(x, enc_w_[kEncoderLevels], bias(kEncoderLevels));
}

Tensor VqVaeModel::encode(const motion::MotionSequence& m) const { return encode(motion_tensor(m)); }

Tensor VqVaeModel::decode(const Tensor& z_q) const {
    if (z_q.cols() != cfg_.latent_dim) {
        throw ShapeError("decode: latent width " + std::to_string(z_q.cols()) + " != " +
                         std::to_string(cfg_.latent_dim));
    }
    auto bias = [&](std::size_t i) { return cfg_.use_bias ? dec_b_[i] : Tensor{}; };
    Tensor x = num::relu(num::conv1d(z_q, dec_w_[0], bias(0), {.stride = 1, .padding = 1}));
    for (std::size_t l = 0; l < kEncoderLevels; ++l) {
        x = num::upsample_nearest(x, 2);
        x = num::relu(num::conv1d(x, dec_w_[1 + l], bias(1 + l), {.stride = 1, .padding = 1}));
    }
    return num::conv1d(x, dec_w_.back(), bias(dec_w_.size() - 1), {.stride = 1, .padding = 1});
}

Tensor VqVaeModel::decode_tokens(const TokenSequence& tokens) const {
    if (tokens.empty()) {
        throw ShapeError("decode: empty token sequence");
    }
    return decode(num::embedding(codebook_.entries, tokens));
}

motion::MotionSequence VqVaeModel::decode_to_motion(const TokenSequence& tokens, double fps) const {
    num::NoGradGuard guard;
    return tensor_motion(decode_tokens(tokens), fps);
}

TokenSequence VqVaeModel::tokenize(const motion::MotionSequence& m) const {
    num::NoGradGuard guard;
    return quantize(encode(m), codebook_.entries).tokens;
}

VqVaeModel::Forward VqVaeModel::forward(const Tensor& motion) const {
    Forward f;
    f.z = encode(motion);
    f.quantized = quantize(f.z, codebook_.entries);
    f.reconstruction = decode(num::straight_through(f.z, f.quantized.z_q));
    f.loss = vq_loss(motion, f.reconstruction, f.z, f.quantized.z_q, cfg_.beta);
    return f;
}

void VqVaeModel::save(Checkpoint& ckpt) const {
    ckpt.set("vq.motion_width", cfg_.motion_width);
    ckpt.set("vq.hidden", cfg_.hidden);
    ckpt.set("vq.d", cfg_.latent_dim);
    ckpt.set("vq.K", cfg_.codebook_size);
    ckpt.set("vq.beta", cfg_.beta);
    ckpt.set("vq.use_bias", cfg_.use_bias ? 1 : 0);
    ckpt.set("vq.seed", static_cast<long long>(cfg_.seed));
    params_.save(ckpt, "vq.");
    for (const auto& [name, counts] : codebook_.usage_counts) {
        ckpt.add_tensor("vq.usage." + name, {counts.size()}, std::vector<double>(counts.begin(), counts.end()));
    }
}

VqVaeModel VqVaeModel::load(const Checkpoint& ckpt) {
    VqVaeConfig cfg;
    cfg.motion_width = static_cast<std::size_t>(ckpt.get_int("vq.motion_width"));
    cfg.hidden = static_cast<std::size_t>(ckpt.get_int("vq.hidden"));
    cfg.latent_dim = static_cast<std::size_t>(ckpt.get_int("vq.d"));
    cfg.codebook_size = static_cast<std::size_t>(ckpt.get_int("vq.K"));
    cfg.beta = ckpt.get_double("vq.beta");
    cfg.use_bias = ckpt.get_int("vq.use_bias") != 0;
    cfg.seed = static_cast<std::uint64_t>(ckpt.get_int("vq.seed"));
    VqVaeModel model(cfg);
    model.params_.load(ckpt, "vq.");
    const std::string prefix = "vq.usage.";
    for (const auto& t : ckpt.tensors()) {
        if (t.name.rfind(prefix, 0) == 0) {
            auto& counts = model.codebook_.usage_counts[t.name.substr(prefix.size())];
            counts.assign(t.data.size(), 0);
            for (std::size_t k = 0; k < t.data.size(); ++k) {
                counts[k] = static_cast<std::uint64_t>(t.data[k]);
            }
        }
    }
    return model;
}

Tensor motion_tensor(const motion::MotionSequence& m) { return Tensor::from({m.frames, m.width}, m.data); }

motion::MotionSequence tensor_motion(const Tensor& t, double fps) {
    motion::MotionSequence m(t.rows(), t.cols(), fps);
    std::copy(t.data().begin(), t.data().end(), m.data.begin());
    return m;
}

std::vector<TokenSequence> tokenize_corpus(VqVaeModel& model, const motion::Corpus& corpus) {
    const std::string tag = motion::to_string(corpus.provenance);
    std::vector<TokenSequence> out;
    out.reserve(corpus.items.size());
    for (const auto& item : corpus.items) {
        const std::size_t usable = item.motion.frames / kDownsample * kDownsample;
        if (usable == 0) {
            throw RangeError("tokenize_corpus: motion of " + std::to_string(item.motion.frames) +
                             " frames is shorter than one token");
        }
        const auto tokens =
            model.tokenize(usable == item.motion.frames ? item.motion : item.motion.slice(0, usable));
        model.codebook().record_usage(tag, tokens);
        out.push_back(tokens);
    }
    return out;
}

std::string format_tokens(const TokenSequence& tokens, std::size_t K) {
    std::string out = "TTOK v1 " + std::to_string(K) + "\n";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += std::to_string(tokens[i]);
    }
    out += '\n';
    return out;
}

TokenSequence parse_tokens(const std::string& text, std::size_t* K) {
    const auto fields = split_ws(text);
    if (fields.size() < 3 || fields[0] != "TTOK" || fields[1] != "v1") {
        throw FormatError("token stream lacks 'TTOK v1 K' header");
    }
    const auto k = parse_int(fields[2]);
    TokenSequence tokens;
    for (std::size_t i = 3; i < fields.size(); ++i) {
        const auto t = parse_int(fields[i]);
        if (t < 0 || t >= k) {
            throw RangeError("token " + fields[i] + " outside [0, " + fields[2] + ")");
        }
        tokens.push_back(static_cast<int>(t));
    }
    if (K != nullptr) {
        *K = static_cast<std::size_t>(k);
    }
    return tokens;
}

}  // namespace tm2d::vq
