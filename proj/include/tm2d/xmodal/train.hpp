#pragma once

#include <functional>
#include <vector>

#include "tm2d/common/checkpoint.hpp"
#include "tm2d/numerics/adam.hpp"
#include "tm2d/xmodal/transformer.hpp"

namespace tm2d::xm {

// Audio rows are aligned one-to-one with the motion tokens.
struct MusicPair {
    Tensor audio;
    std::vector<int> tokens;
};

struct TextPair {
    motion::TextTokens text;
    std::vector<int> tokens;
};

struct XmTrainConfig {
    std::size_t steps = 2000;
    std::size_t batch = 64;
    double lr = 1e-4;
    // Training crop length in tokens; also the decoding context at inference.
    std::size_t max_tokens = 32;
    std::uint64_t seed = 1;
    // Scale of the text-branch loss; 0 skips text updates entirely.
    double text_weight = 1.0;
};

struct XmStepLog {
    std::size_t step = 0;
    Branch branch = Branch::kMusic;
    double loss = 0.0;
};

// Teacher-forcing view of tokens[offset, offset+length): the decoder input
// starts with the preceding token (BOS at offset 0).
struct Crop {
    std::size_t offset = 0;
    std::vector<int> input;
    std::vector<int> target;
};

Crop make_crop(const std::vector<int>& tokens, std::size_t offset, std::size_t length, int bos);

// Non-overlapping chunks of at most `context` tokens covering the sequence.
std::vector<Crop> context_chunks(const std::vector<int>& tokens, std::size_t context, int bos);

// Branches alternate strictly, music first. Each step draws `batch`
// examples of that branch with a random crop each.
class XmTrainer {
public:
    XmTrainer(XmodalModel model, std::vector<MusicPair> music, std::vector<TextPair> text, XmTrainConfig cfg);
    static XmTrainer resume(const Checkpoint& ckpt, std::vector<MusicPair> music, std::vector<TextPair> text,
                            XmTrainConfig cfg);

    XmStepLog train_step();
    void run(std::size_t until_step, const std::function<void(const XmStepLog&)>& on_step = {});

    std::size_t step() const { return step_; }
    XmodalModel& model() { return model_; }
    const XmodalModel& model() const { return model_; }
    const std::vector<XmStepLog>& log() const { return log_; }

    void save(Checkpoint& ckpt) const;

private:
    Tensor example_loss(Branch branch, std::size_t index);

    XmodalModel model_;
    std::vector<MusicPair> music_;
    std::vector<TextPair> text_;
    XmTrainConfig cfg_;
    num::AdamState adam_;
    num::Rng rng_;
    std::size_t step_ = 0;
    std::vector<XmStepLog> log_;
};

XmodalModel train_xmodal(const XmConfig& model_cfg, std::vector<MusicPair> music, std::vector<TextPair> text,
                         const XmTrainConfig& cfg, std::vector<XmStepLog>* log = nullptr);

// Mean cross-entropy over every token of every pair, chunked by `context`.
double branch_loss(const XmodalModel& model, const std::vector<MusicPair>& pairs, std::size_t context);
double branch_loss(const XmodalModel& model, const std::vector<TextPair>& pairs, std::size_t context);

// Fraction of tokens whose teacher-forced argmax equals the target.
double teacher_forced_accuracy(const XmodalModel& model, const std::vector<MusicPair>& pairs, std::size_t context);
double teacher_forced_accuracy(const XmodalModel& model, const std::vector<TextPair>& pairs, std::size_t context);

}  // namespace tm2d::xm
