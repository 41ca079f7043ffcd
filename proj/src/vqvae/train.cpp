#include "tm2d/vqvae/train.hpp"

#include <cmath>

#include "tm2d/common/errors.hpp"
#include "tm2d/numerics/ops.hpp"

namespace tm2d::vq {

std::vector<motion::MotionSequence> corpus_windows(const motion::Corpus& corpus, std::size_t window,
                                                   std::size_t stride) {
    std::vector<motion::MotionSequence> out;
    for (const auto& item : corpus.items) {
        if (item.motion.frames < window) {
            continue;
        }
        auto w = motion::window_motion(item.motion, window, stride);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

VqTrainer::VqTrainer(VqVaeModel model, std::vector<motion::Corpus> corpora, VqTrainConfig cfg)
    : model_(std::move(model)), corpora_(std::move(corpora)), cfg_(cfg), rng_(cfg.seed, 0x77a1) {
    if (cfg_.batch == 0) {
        throw ConfigError("train_vqvae: batch must be >= 1");
    }
    if (cfg_.window % kDownsample != 0) {
        throw ConfigError("train_vqvae: window must be a multiple of " + std::to_string(kDownsample));
    }
    for (const auto& corpus : corpora_) {
        for (auto& w : corpus_windows(corpus, cfg_.window, cfg_.stride)) {
            windows_.push_back(motion_tensor(w));
        }
    }
    if (windows_.empty()) {
        throw ConfigError("train_vqvae: corpora provide no " + std::to_string(cfg_.window) + "-frame windows");
    }
    epoch_steps_ = cfg_.epoch_steps > 0 ? cfg_.epoch_steps : (windows_.size() + cfg_.batch - 1) / cfg_.batch;
    adam_ = num::make_adam_state(model_.params().tensors(), {.lr = cfg_.lr});
}

VqTrainer VqTrainer::resume(const Checkpoint& ckpt, std::vector<motion::Corpus> corpora, VqTrainConfig cfg) {
    VqTrainer trainer(VqVaeModel::load(ckpt), std::move(corpora), cfg);
    trainer.adam_ = num::load_adam(ckpt, "vq.adam.", trainer.model_.params());
    trainer.adam_.config.lr = cfg.lr;
    trainer.rng_ = num::load_rng(ckpt, "vq.train.rng");
    trainer.step_ = static_cast<std::size_t>(ckpt.get_int("vq.train.step"));
    return trainer;
}

VqStepLog VqTrainer::train_step() {
    auto& params = model_.params().tensors();
    num::zero_grads(params);
    VqStepLog entry;
    const double inv = 1.0 / static_cast<double>(cfg_.batch);
    for (std::size_t b = 0; b < cfg_.batch; ++b) {
        const Tensor& w = windows_[rng_.below(static_cast<std::uint32_t>(windows_.size()))];
        const auto f = model_.forward(w);
        if (!std::isfinite(f.loss.total.item())) {
            throw NumericalError("train_vqvae: non-finite loss at step " + std::to_string(step_ + 1));
        }
        num::scale(f.loss.total, inv).backward();
        entry.loss += f.loss.total.item() * inv;
        entry.reconstruction += f.loss.reconstruction * inv;
        entry.codebook += f.loss.codebook * inv;
        entry.commitment += f.loss.commitment * inv;
    }
    num::adam_step(params, adam_);
    entry.step = ++step_;
    log_.push_back(entry);
    if (cfg_.track_usage && step_ % epoch_steps_ == 0) {
        usage_pass();
    }
    return entry;
}

void VqTrainer::run(std::size_t until_step, const std::function<void(const VqStepLog&)>& on_step) {
    while (step_ < until_step) {
        const auto entry = train_step();
        if (on_step) {
            on_step(entry);
        }
    }
}

void VqTrainer::usage_pass() {
    EpochUsage usage;
    usage.epoch = step_ / epoch_steps_;
    usage.step = step_;
    for (const auto& corpus : corpora_) {
        const std::string tag = motion::to_string(corpus.provenance);
        auto& counts = usage.counts[tag];
        counts.assign(model_.codebook().size(), 0);
        for (const auto& tokens : tokenize_corpus(model_, corpus)) {
            for (int t : tokens) {
                ++counts[static_cast<std::size_t>(t)];
            }
        }
    }
    epochs_.push_back(std::move(usage));
}

void VqTrainer::save(Checkpoint& ckpt) const {
    ckpt.set("kind", "vqvae");
    model_.save(ckpt);
    num::save_adam(ckpt, "vq.adam.", model_.params(), adam_);
    num::save_rng(ckpt, "vq.train.rng", rng_);
    ckpt.set("vq.train.step", step_);
}

VqVaeModel train_vqvae(const std::vector<motion::Corpus>& corpora, const VqVaeConfig& model_cfg,
                       const VqTrainConfig& cfg, std::vector<VqStepLog>* log, std::vector<EpochUsage>* epochs) {
    bool any = false;
    for (const auto& c : corpora) {
        any = any || !c.items.empty();
    }
    if (!any) {
        throw ConfigError("train_vqvae: no training motions");
    }
    VqTrainer trainer(VqVaeModel(model_cfg), corpora, cfg);
    trainer.run(cfg.steps);
    if (log != nullptr) {
        *log = trainer.log();
    }
    if (epochs != nullptr) {
        *epochs = trainer.epochs();
    }
    return std::move(trainer.model());
}

double reconstruction_l1(const VqVaeModel& model, const std::vector<motion::MotionSequence>& windows) {
    if (windows.empty()) {
        throw ContractError("reconstruction_l1: no windows");
    }
    num::NoGradGuard guard;
    double total = 0.0;
    for (const auto& w : windows) {
        const Tensor x = motion_tensor(w);
        const auto q = quantize(model.encode(x), model.codebook().entries);
        total += num::l1_loss(model.decode(q.z_q), x).item();
    }
    return total / static_cast<double>(windows.size());
}

}  // namespace tm2d::vq
