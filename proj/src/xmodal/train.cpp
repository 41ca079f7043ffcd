#include "tm2d/xmodal/train.hpp"

#include <algorithm>
#include <cmath>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/ops.hpp"
#include "tm2d/numerics/params.hpp"

namespace tm2d::xm {

Crop make_crop(const std::vector<int>& tokens, std::size_t offset, std::size_t length, int bos) {
    if (length == 0 || offset + length > tokens.size()) {
        throw RangeError("crop [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") outside a sequence of " + std::to_string(tokens.size()) + " tokens");
    }
    Crop crop;
    crop.offset = offset;
    crop.input.reserve(length);
    crop.input.push_back(offset == 0 ? bos : tokens[offset - 1]);
    crop.input.insert(crop.input.end(), tokens.begin() + static_cast<std::ptrdiff_t>(offset),
                      tokens.begin() + static_cast<std::ptrdiff_t>(offset + length - 1));
    crop.target.assign(tokens.begin() + static_cast<std::ptrdiff_t>(offset),
                       tokens.begin() + static_cast<std::ptrdiff_t>(offset + length));
    return crop;
}

std::vector<Crop> context_chunks(const std::vector<int>& tokens, std::size_t context, int bos) {
    if (context == 0) {
        throw ConfigError("context must be >= 1");
    }
    std::vector<Crop> out;
    for (std::size_t o = 0; o < tokens.size(); o += context) {
        out.push_back(make_crop(tokens, o, std::min(context, tokens.size() - o), bos));
    }
    return out;
}

namespace {

std::size_t music_length(const MusicPair& p) { return std::min(p.audio.rows(), p.tokens.size()); }

CondFeatures music_cond(const XmodalModel& model, const MusicPair& p, const Crop& crop) {
    return model.encode_audio(num::slice_rows(p.audio, crop.offset, crop.offset + crop.target.size()));
}

template <typename Pair, typename CondFn>
void for_each_chunk(const XmodalModel& model, const std::vector<Pair>& pairs, std::size_t context, CondFn cond_fn,
                    const std::function<void(const Tensor&, const Crop&)>& fn) {
    num::NoGradGuard guard;
    for (const auto& p : pairs) {
        std::vector<int> tokens = p.tokens;
        if constexpr (std::is_same_v<Pair, MusicPair>) {
            tokens.resize(music_length(p));
        }
        for (const auto& crop : context_chunks(tokens, context, model.bos())) {
            fn(model.decoder_forward(crop.input, cond_fn(p, crop)), crop);
        }
    }
}

template <typename Pair, typename CondFn>
double mean_loss(const XmodalModel& model, const std::vector<Pair>& pairs, std::size_t context, CondFn cond_fn) {
    double total = 0.0;
    std::size_t count = 0;
    for_each_chunk(model, pairs, context, cond_fn, [&](const Tensor& logits, const Crop& crop) {
        total += num::softmax_cross_entropy(logits, crop.target).item() * static_cast<double>(crop.target.size());
        count += crop.target.size();
    });
    if (count == 0) {
        throw ContractError("branch_loss: no tokens");
    }
    return total / static_cast<double>(count);
}

template <typename Pair, typename CondFn>
double accuracy(const XmodalModel& model, const std::vector<Pair>& pairs, std::size_t context, CondFn cond_fn) {
    std::size_t hits = 0, count = 0;
    for_each_chunk(model, pairs, context, cond_fn, [&](const Tensor& logits, const Crop& crop) {
        const auto v = logits.data();
        const std::size_t K = logits.cols();
        for (std::size_t i = 0; i < crop.target.size(); ++i) {
            const auto row = v.subspan(i * K, K);
            const auto best = std::max_element(row.begin(), row.end()) - row.begin();
            hits += best == crop.target[i] ? 1 : 0;
        }
        count += crop.target.size();
    });
    if (count == 0) {
        throw ContractError("teacher_forced_accuracy: no tokens");
    }
    return static_cast<double>(hits) / static_cast<double>(count);
}

auto music_cond_fn(const XmodalModel& model) {
    return [&model](const MusicPair& p, const Crop& crop) { return music_cond(model, p, crop); };
}

auto text_cond_fn(const XmodalModel& model) {
    return [&model](const TextPair& p, const Crop&) { return model.encode_text(p.text, true); };
}

}  // namespace

XmTrainer::XmTrainer(XmodalModel model, std::vector<MusicPair> music, std::vector<TextPair> text, XmTrainConfig cfg)
    : model_(std::move(model)), music_(std::move(music)), text_(std::move(text)), cfg_(cfg), rng_(cfg.seed, 0x5a17) {
    if (music_.empty() || text_.empty()) {
        throw ConfigError("train_xmodal: both branches need at least one pair (music " +
                          std::to_string(music_.size()) + ", text " + std::to_string(text_.size()) + ")");
    }
    if (cfg_.batch == 0 || cfg_.max_tokens == 0) {
        throw ConfigError("train_xmodal: batch and max_tokens must be >= 1");
    }
    if (!(cfg_.text_weight >= 0.0)) {
        throw ConfigError("train_xmodal: text_weight must be >= 0");
    }
    const auto K = static_cast<int>(model_.config().codebook_size);
    const auto check = [K](const std::vector<int>& tokens, const char* branch) {
        if (tokens.empty()) {
            throw ConfigError(std::string("train_xmodal: empty token sequence in ") + branch + " branch");
        }
        for (int t : tokens) {
            if (t < 0 || t >= K) {
                throw IndexError("train_xmodal: token " + std::to_string(t) + " outside codebook of " +
                                 std::to_string(K));
            }
        }
    };
    for (const auto& p : music_) {
        check(p.tokens, "music");
        if (music_length(p) == 0) {
            throw ConfigError("train_xmodal: music pair without audio frames");
        }
    }
    for (const auto& p : text_) {
        check(p.tokens, "text");
    }
    adam_ = num::make_adam_state(model_.params().tensors(), {.lr = cfg_.lr});
}

XmTrainer XmTrainer::resume(const Checkpoint& ckpt, std::vector<MusicPair> music, std::vector<TextPair> text,
                            XmTrainConfig cfg) {
    XmTrainer trainer(XmodalModel::load(ckpt), std::move(music), std::move(text), cfg);
    trainer.adam_ = num::load_adam(ckpt, "xm.adam.", trainer.model_.params());
    trainer.adam_.config.lr = cfg.lr;
    trainer.rng_ = num::load_rng(ckpt, "xm.train.rng");
    trainer.step_ = static_cast<std::size_t>(ckpt.get_int("xm.train.step"));
    return trainer;
}

Tensor XmTrainer::example_loss(Branch branch, std::size_t index) {
    const int bos = model_.bos();
    if (branch == Branch::kMusic) {
        const MusicPair& p = music_[index];
        const std::size_t n = music_length(p);
        const std::size_t len = std::min(n, cfg_.max_tokens);
        const std::size_t offset = rng_.below(static_cast<std::uint32_t>(n - len + 1));
        const Crop crop = make_crop(p.tokens, offset, len, bos);
        return num::softmax_cross_entropy(model_.decoder_forward(crop.input, music_cond(model_, p, crop)), crop.target);
    }
    const TextPair& p = text_[index];
    const std::size_t n = p.tokens.size();
    const std::size_t len = std::min(n, cfg_.max_tokens);
    const std::size_t offset = rng_.below(static_cast<std::uint32_t>(n - len + 1));
    const Crop crop = make_crop(p.tokens, offset, len, bos);
    return num::softmax_cross_entropy(model_.decoder_forward(crop.input, model_.encode_text(p.text, true)),
                                      crop.target);
}

XmStepLog XmTrainer::train_step() {
    const Branch branch = step_ % 2 == 0 ? Branch::kMusic : Branch::kText;
    const std::size_t pool = branch == Branch::kMusic ? music_.size() : text_.size();
    const double weight = branch == Branch::kText ? cfg_.text_weight : 1.0;
    auto& params = model_.params().tensors();
    num::zero_grads(params);
    XmStepLog entry;
    entry.branch = branch;
    const double inv = 1.0 / static_cast<double>(cfg_.batch);
    for (std::size_t b = 0; b < cfg_.batch; ++b) {
        const std::size_t index = rng_.below(static_cast<std::uint32_t>(pool));
        if (weight == 0.0) {
            num::NoGradGuard guard;
            entry.loss += example_loss(branch, index).item() * inv;
            continue;
        }
        const Tensor loss = example_loss(branch, index);
        if (!std::isfinite(loss.item())) {
            throw NumericalError("train_xmodal: non-finite loss at step " + std::to_string(step_ + 1));
        }
        num::scale(loss, weight * inv).backward();
        entry.loss += loss.item() * inv;
    }
    if (weight != 0.0) {
        num::adam_step(params, adam_);
    }
    entry.step = ++step_;
    log_.push_back(entry);
    return entry;
}

void XmTrainer::run(std::size_t until_step, const std::function<void(const XmStepLog&)>& on_step) {
    while (step_ < until_step) {
        const auto entry = train_step();
        if (on_step) {
            on_step(entry);
        }
    }
}

void XmTrainer::save(Checkpoint& ckpt) const {
    ckpt.set("kind", "xmodal");
    model_.save(ckpt);
    ckpt.set("xm.context", cfg_.max_tokens);
    num::save_adam(ckpt, "xm.adam.", model_.params(), adam_);
    num::save_rng(ckpt, "xm.train.rng", rng_);
    ckpt.set("xm.train.step", step_);
}

XmodalModel train_xmodal(const XmConfig& model_cfg, std::vector<MusicPair> music, std::vector<TextPair> text,
                         const XmTrainConfig& cfg, std::vector<XmStepLog>* log) {
    XmTrainer trainer(XmodalModel(model_cfg), std::move(music), std::move(text), cfg);
    trainer.run(cfg.steps);
    if (log != nullptr) {
        *log = trainer.log();
    }
    return std::move(trainer.model());
}

double branch_loss(const XmodalModel& model, const std::vector<MusicPair>& pairs, std::size_t context) {
    return mean_loss(model, pairs, context, music_cond_fn(model));
}

double branch_loss(const XmodalModel& model, const std::vector<TextPair>& pairs, std::size_t context) {
    return mean_loss(model, pairs, context, text_cond_fn(model));
}

double teacher_forced_accuracy(const XmodalModel& model, const std::vector<MusicPair>& pairs, std::size_t context) {
    return accuracy(model, pairs, context, music_cond_fn(model));
}

double teacher_forced_accuracy(const XmodalModel& model, const std::vector<TextPair>& pairs, std::size_t context) {
    return accuracy(model, pairs, context, text_cond_fn(model));
}

}  // namespace tm2d::xm
