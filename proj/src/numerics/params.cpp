#include "tm2d/numerics/params.hpp"

#include <algorithm>

#include "tm2d/common/errors.hpp"

namespace tm2d::num {

Tensor ParamSet::add(const std::string& name, Tensor t) {
    if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
        throw ContractError("duplicate parameter name '" + name + "'");
    }
    t.set_requires_grad(true);
    names_.push_back(name);
    tensors_.push_back(t);
    return t;
}

const Tensor& ParamSet::get(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return tensors_[i];
        }
    }
    throw ContractError("no parameter named '" + name + "'");
}

std::size_t ParamSet::element_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) {
        n += t.numel();
    }
    return n;
}

void ParamSet::save(Checkpoint& ckpt, const std::string& prefix) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const auto v = tensors_[i].data();
        ckpt.add_tensor(prefix + names_[i], tensors_[i].shape(), std::vector<double>(v.begin(), v.end()));
    }
}

void ParamSet::load(const Checkpoint& ckpt, const std::string& prefix) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const auto& stored = ckpt.tensor(prefix + names_[i]);
        if (stored.shape != tensors_[i].shape()) {
            throw FormatError("checkpoint tensor '" + prefix + names_[i] + "' has shape " + shape_str(stored.shape) +
                              ", model expects " + shape_str(tensors_[i].shape()));
        }
        std::copy(stored.data.begin(), stored.data.end(), tensors_[i].mutable_data().begin());
    }
}

void save_adam(Checkpoint& ckpt, const std::string& prefix, const ParamSet& params, const AdamState& state) {
    ckpt.set(prefix + "step_count", static_cast<long long>(state.step_count));
    ckpt.set(prefix + "lr", state.config.lr);
    ckpt.set(prefix + "beta1", state.config.beta1);
    ckpt.set(prefix + "beta2", state.config.beta2);
    ckpt.set(prefix + "eps", state.config.eps);
    for (std::size_t i = 0; i < params.names().size(); ++i) {
        const auto& shape = params.tensors()[i].shape();
        ckpt.add_tensor(prefix + "m." + params.names()[i], shape, state.first_moment[i]);
        ckpt.add_tensor(prefix + "v." + params.names()[i], shape, state.second_moment[i]);
    }
}

AdamState load_adam(const Checkpoint& ckpt, const std::string& prefix, const ParamSet& params) {
    AdamState state;
    state.step_count = static_cast<std::uint64_t>(ckpt.get_int(prefix + "step_count"));
    state.config.lr = ckpt.get_double(prefix + "lr");
    state.config.beta1 = ckpt.get_double(prefix + "beta1");
    state.config.beta2 = ckpt.get_double(prefix + "beta2");
    state.config.eps = ckpt.get_double(prefix + "eps");
    for (std::size_t i = 0; i < params.names().size(); ++i) {
        const auto& m = ckpt.tensor(prefix + "m." + params.names()[i]);
        const auto& v = ckpt.tensor(prefix + "v." + params.names()[i]);
        if (m.data.size() != params.tensors()[i].numel() || v.data.size() != params.tensors()[i].numel()) {
            throw FormatError("optimizer state for '" + params.names()[i] + "' does not match the model");
        }
        state.first_moment.push_back(m.data);
        state.second_moment.push_back(v.data);
    }
    return state;
}

void save_rng(Checkpoint& ckpt, const std::string& key, const Rng& rng) {
    ckpt.set(key + ".state", std::to_string(rng.state()));
    ckpt.set(key + ".inc", std::to_string(rng.increment()));
}

Rng load_rng(const Checkpoint& ckpt, const std::string& key) {
    return Rng::from_raw(std::stoull(ckpt.get(key + ".state")), std::stoull(ckpt.get(key + ".inc")));
}

}  // namespace tm2d::num
