#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tm2d/numerics/rng.hpp"

namespace tm2d::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same size as value
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backward;

    void ensure_grad() {
        if (grad.size() != value.size()) {
            grad.assign(value.size(), 0.0);
        }
    }
};

}  // namespace detail

// Reference-semantics handle to a node of the dynamic computation graph.
// Copies share storage; parameters are leaf tensors with requires_grad set.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev, bool requires_grad = false);
    static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t i) const;
    std::size_t numel() const;
    // Rank-2 conveniences; rank-1 tensors are treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const;
    // Writable view of the values; meant for leaves (parameters, inputs).
    std::span<double> mutable_data();
    double item() const;
    double at(std::size_t r, std::size_t c) const;

    bool requires_grad() const;
    void set_requires_grad(bool flag);
    bool has_grad() const;
    // Empty span when no gradient has been accumulated.
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    // Reverse-mode sweep from this scalar; gradients accumulate into every
    // tracked ancestor.
    void backward() const;

    // Same values, cut from the graph (stop-gradient).
    Tensor detach() const;
    Tensor clone() const;

    const detail::Node* id() const { return node_.get(); }
    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Ops reachable from root that take part in differentiation, inputs first.
std::vector<const detail::Node*> topological_order(const Tensor& root);

namespace detail {

using BackwardFn = std::function<void(Node&)>;

// Creates an op output; records parents/backward only when some input is
// tracked and recording is enabled.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs, const char* op,
                   BackwardFn backward);

}  // namespace detail

}  // namespace tm2d::num
