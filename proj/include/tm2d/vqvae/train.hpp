#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tm2d/common/checkpoint.hpp"
#include "tm2d/motion/synth.hpp"
#include "tm2d/numerics/adam.hpp"
#include "tm2d/numerics/rng.hpp"
#include "tm2d/vqvae/vqvae.hpp"

namespace tm2d::vq {

struct VqTrainConfig {
    std::size_t steps = 5000;
    std::size_t batch = 128;
    double lr = 1e-4;
    std::size_t window = 64;
    std::size_t stride = 16;
    std::uint64_t seed = 1;
    // Steps per usage epoch; 0 means one pass over the pooled windows.
    std::size_t epoch_steps = 0;
    bool track_usage = true;
};

struct VqStepLog {
    std::size_t step = 0;
    double loss = 0.0;
    double reconstruction = 0.0;
    double codebook = 0.0;
    double commitment = 0.0;
};

// Token histogram of one tokenization pass per corpus, taken at an epoch end.
struct EpochUsage {
    std::size_t epoch = 0;
    std::size_t step = 0;
    std::map<std::string, std::vector<std::uint64_t>> counts;
};

// Mini-batches are drawn uniformly from the pooled 64-frame windows of all
// corpora. The trainer owns model, optimizer and sampler state so a run can be
// checkpointed and resumed bit-exactly.
class VqTrainer {
public:
    VqTrainer(VqVaeModel model, std::vector<motion::Corpus> corpora, VqTrainConfig cfg);
    // Restores model, optimizer, sampler and step counter from `ckpt`.
    static VqTrainer resume(const Checkpoint& ckpt, std::vector<motion::Corpus> corpora, VqTrainConfig cfg);

    void run(std::size_t until_step, const std::function<void(const VqStepLog&)>& on_step = {});
    VqStepLog train_step();

    std::size_t step() const { return step_; }
    std::size_t epoch_steps() const { return epoch_steps_; }
    std::size_t window_count() const { return windows_.size(); }
    VqVaeModel& model() { return model_; }
    const VqVaeModel& model() const { return model_; }
    const std::vector<VqStepLog>& log() const { return log_; }
    const std::vector<EpochUsage>& epochs() const { return epochs_; }

    void save(Checkpoint& ckpt) const;

private:
    void usage_pass();

    VqVaeModel model_;
    std::vector<motion::Corpus> corpora_;
    VqTrainConfig cfg_;
    std::vector<Tensor> windows_;
    num::AdamState adam_;
    num::Rng rng_;
    std::size_t step_ = 0;
    std::size_t epoch_steps_ = 1;
    std::vector<VqStepLog> log_;
    std::vector<EpochUsage> epochs_;
};

VqVaeModel train_vqvae(const std::vector<motion::Corpus>& corpora, const VqVaeConfig& model_cfg,
                       const VqTrainConfig& cfg, std::vector<VqStepLog>* log = nullptr,
                       std::vector<EpochUsage>* epochs = nullptr);

// Mean per-element L1 of decode(quantize(encode(w))) against each window.
double reconstruction_l1(const VqVaeModel& model, const std::vector<motion::MotionSequence>& windows);

// All windows of every motion in the corpus.
std::vector<motion::MotionSequence> corpus_windows(const motion::Corpus& corpus, std::size_t window,
                                                   std::size_t stride);

}  // namespace tm2d::vq
