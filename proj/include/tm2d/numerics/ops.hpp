#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tm2d/numerics/tensor.hpp"

namespace tm2d::num {

// Differentiable primitives. Matrices are rank-2, row-major: rows index time
// (or batch) and columns index channels.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a[m x n] + bias broadcast over rows; bias has n elements.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor relu(const Tensor& a);

// Row-wise softmax. Blocked entries (allowed[i] == 0) get weight 0; a row
// with no allowed entry yields all zeros instead of NaN.
Tensor softmax_rows(const Tensor& a);
Tensor masked_softmax_rows(const Tensor& a, std::span<const std::uint8_t> allowed);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Rows of table[V x c] selected by ids.
Tensor embedding(const Tensor& table, std::span<const int> ids);

struct Conv1dOptions {
    std::size_t stride = 1;
    std::size_t padding = 0;  // zeros added at both ends of the time axis
};

// Cross-correlation of x[T x c_in] with kernel[w x c_in x c_out]; optional
// bias[c_out]. Output length floor((T + 2p - w) / stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias, Conv1dOptions opt = {});
Tensor conv1d(const Tensor& x, const Tensor& kernel, Conv1dOptions opt = {});
std::size_t conv1d_out_len(std::size_t length, std::size_t width, Conv1dOptions opt);

// Repeats each row `factor` times along the time axis.
Tensor upsample_nearest(const Tensor& x, std::size_t factor);

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(const std::vector<Tensor>& parts);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_squares(const Tensor& a);
// Mean absolute difference over all elements.
Tensor l1_loss(const Tensor& prediction, const Tensor& target);

// Mean over rows of -log softmax(logits)[target]. Fused log-sum-exp.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets);

// Forward value is `quantized`; the backward pass routes the incoming
// gradient to `continuous` unchanged (z + sg[z_q - z]).
Tensor straight_through(const Tensor& continuous, const Tensor& quantized);

bool all_finite(std::span<const double> values);

}  // namespace tm2d::num
