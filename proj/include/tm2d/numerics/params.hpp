#pragma once

#include <string>
#include <vector>

#include "tm2d/common/checkpoint.hpp"
#include "tm2d/numerics/adam.hpp"
#include "tm2d/numerics/rng.hpp"
#include "tm2d/numerics/tensor.hpp"

namespace tm2d::num {

// Ordered, named collection of trainable leaf tensors.
class ParamSet {
public:
    Tensor add(const std::string& name, Tensor t);

    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }
    const std::vector<std::string>& names() const { return names_; }
    const Tensor& get(const std::string& name) const;
    std::size_t element_count() const;

    // Tensors are stored as "<prefix><name>".
    void save(Checkpoint& ckpt, const std::string& prefix) const;
    // Copies values in place so existing handles stay valid. Shapes must match.
    void load(const Checkpoint& ckpt, const std::string& prefix);

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
};

void save_adam(Checkpoint& ckpt, const std::string& prefix, const ParamSet& params, const AdamState& state);
AdamState load_adam(const Checkpoint& ckpt, const std::string& prefix, const ParamSet& params);

void save_rng(Checkpoint& ckpt, const std::string& key, const Rng& rng);
Rng load_rng(const Checkpoint& ckpt, const std::string& key);

}  // namespace tm2d::num
