#include "tm2d/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tm2d/common/errors.hpp"

namespace tm2d::num {

namespace {

thread_local bool g_grad_enabled = true;

detail::Node& checked(const std::shared_ptr<detail::Node>& n) {
    if (!n) {
        throw ContractError("use of an undefined tensor");
    }
    return *n;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            s += "x";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must have at least one extent");
    }
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
        }
    }
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(values.size()) +
                         " values");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) {
        x = rng.normal(0.0, stddev);
    }
    return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) {
        x = rng.uniform(lo, hi);
    }
    return from(std::move(shape), std::move(v), requires_grad);
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t i) const {
    const Shape& s = shape();
    if (i >= s.size()) {
        throw ShapeError("dimension " + std::to_string(i) + " out of range for " + shape_str(s));
    }
    return s[i];
}

std::size_t Tensor::numel() const { return checked(node_).value.size(); }

std::size_t Tensor::rows() const {
    const Shape& s = shape();
    return s.size() == 1 ? 1 : s[0];
}

std::size_t Tensor::cols() const {
    const Shape& s = shape();
    return s.size() == 1 ? s[0] : numel() / s[0];
}

std::span<const double> Tensor::data() const { return checked(node_).value; }

std::span<double> Tensor::mutable_data() { return checked(node_).value; }

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    }
    return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

void Tensor::set_requires_grad(bool flag) { checked(node_).requires_grad = flag; }

bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }

std::span<const double> Tensor::grad() const { return checked(node_).grad; }

std::span<double> Tensor::mutable_grad() {
    checked(node_).ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    auto& n = checked(node_);
    std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    auto& n = checked(node_);
    return from(n.shape, n.value, false);
}

Tensor Tensor::clone() const {
    auto& n = checked(node_);
    return from(n.shape, n.value, n.requires_grad);
}

std::vector<const detail::Node*> topological_order(const Tensor& root) {
    std::vector<const detail::Node*> order;
    if (!root.defined() || !root.requires_grad()) {
        return order;
    }
    // Iterative post-order DFS; each node is emitted once, after its parents.
    std::unordered_set<const detail::Node*> seen;
    std::vector<std::pair<const detail::Node*, std::size_t>> stack;
    stack.emplace_back(root.id(), 0);
    seen.insert(root.id());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const detail::Node* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void Tensor::backward() const {
    auto& root = checked(node_);
    if (root.value.size() != 1) {
        throw ContractError("backward() requires a scalar output, got shape " + shape_str(root.shape));
    }
    if (!root.requires_grad) {
        return;
    }
    const auto order = topological_order(*this);
    root.ensure_grad();
    root.grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto* node = const_cast<detail::Node*>(*it);
        if (node->backward && !node->grad.empty()) {
            node->backward(*node);
        }
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs, const char* op,
                   BackwardFn backward) {
    Tensor out = Tensor::from(std::move(shape), std::move(value), false);
    if (!g_grad_enabled) {
        return out;
    }
    const bool tracked =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!tracked) {
        return out;
    }
    auto& node = *out.node();
    node.requires_grad = true;
    node.op = op;
    node.parents.reserve(inputs.size());
    for (auto& t : inputs) {
        node.parents.push_back(t.node());
    }
    node.backward = std::move(backward);
    return out;
}

}  // namespace detail

}  // namespace tm2d::num
