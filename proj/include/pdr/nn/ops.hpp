// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdr/nn/tensor.hpp"

// Differentiable primitives. Every op records its gradient rule on the active
// tape when an input requires a gradient.
namespace pdr::nn {

// [..., m, k] x [k, n] -> [..., m, n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Adds a length-n vector to every row of [..., n].
Tensor bias_add(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor swish(const Tensor& x);

Tensor softmax_lastdim(const Tensor& x);
// Softmax over axis 1 of [m, k, c] restricted to slots with mask != 0, one
// distribution per (m, c). Masked slots get weight exactly 0; a row with no
// unmasked slot is all zeros.
Tensor neighbor_softmax(const Tensor& scores, std::span<const std::uint8_t> real_mask);

Tensor concat_lastdim(const Tensor& a, const Tensor& b);
// Keeps columns [begin, end) of the last axis.
Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end);
// Keeps rows [begin, end) of [n, d].
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape);

// Maximum along the last axis; the gradient goes to the first argmax.
Tensor max_lastdim(const Tensor& x);
// Column-wise maximum of [n, c] -> [c]; first argmax on ties.
Tensor max_rows(const Tensor& x);

// sum_k values[m, k, :] * weights[m, k, :] -> [m, c]
Tensor weighted_sum(const Tensor& values, const Tensor& weights);

// rows[i] = x[index[i]] for [n, d] -> [len, d]; index -1 yields a zero row.
Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> index);
// [m, c] -> [m, k, c]
Tensor repeat_neighbors(const Tensor& x, std::size_t k);
// [c] -> [n, c]
Tensor tile_rows(const Tensor& v, std::size_t n);

// Ragged neighbor layout: rows offsets[i]..offsets[i+1] of an [r, c] tensor
// belong to center i.
// [m, c] -> [r, c], each center row repeated over its segment.
Tensor repeat_segments(const Tensor& x, std::span<const std::size_t> offsets);
// Per-channel softmax within each segment of [r, c].
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> offsets);
// [r, c] x [r, c] -> [m, c]; empty segments give zero rows.
Tensor segment_weighted_sum(const Tensor& values, const Tensor& weights,
                            std::span<const std::size_t> offsets);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace pdr::nn
