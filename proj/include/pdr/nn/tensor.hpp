// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pdr::nn {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

// Storage behind a Tensor handle. Values are fixed once the node is built;
// only parameter leaves are ever rewritten (by optimizers and loaders).
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  const Tape* tape = nullptr;  // recording tape for op results, null for leaves
};

// Shared handle to a dense row-major float64 array. Copying a Tensor copies
// the handle, not the data.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);
  // Leaf that accumulates gradients on every tape it is used on.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::span<const double> values() const;
  double operator[](std::size_t flat_index) const { return values()[flat_index]; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_ && node_->tape == nullptr; }
  const Tape* tape() const { return node_ ? node_->tape : nullptr; }

  // Constant copy with no gradient connection.
  Tensor detach() const;
  // Writable view for parameter leaves (optimizer updates, checkpoint loads).
  std::span<double> mutable_values();

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;
  friend class Tape;
};

// Append-only record of differentiable operations. One tape per thread of
// graph construction; parameters may be shared read-only across tapes since
// gradients are held by the tape, not by the parameter.
class Tape {
 public:
  // grad_inputs[i] is empty when input i does not require a gradient.
  using BackwardFn = std::function<void(std::span<const double> grad_output,
                                        std::span<const std::span<double>> grad_inputs)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor record(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                BackwardFn backward);

  // Reverse sweep from a scalar produced on this tape. A second call without
  // reset() throws.
  void backward(const Tensor& loss);

  // dLoss/dTensor after backward(); zeros when the tensor was unreachable.
  std::vector<double> grad(const Tensor& tensor) const;
  bool has_grad(const Tensor& tensor) const;

  void reset();
  std::size_t node_count() const { return records_.size(); }
  bool consumed() const { return consumed_; }

  // Tape that op results are recorded on for the calling thread, or null.
  static Tape* active();

 private:
  struct Entry {
    std::shared_ptr<TensorNode> node;
    std::vector<double> grad;
  };
  struct Record {
    std::vector<std::size_t> inputs;  // entry ids, npos for non-grad inputs
    std::size_t output;
    BackwardFn backward;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t entry_for(const std::shared_ptr<TensorNode>& node);

  std::vector<Entry> entries_;
  std::unordered_map<const TensorNode*, std::size_t> index_;
  std::vector<Record> records_;
  bool consumed_ = false;

  friend class TapeScope;
};

// Installs a tape as the calling thread's recording target for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Disables recording for inference.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

// Result of an op: recorded on the active tape when any input needs a
// gradient, otherwise a plain constant.
Tensor make_result(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                   Tape::BackwardFn backward);

}  // namespace pdr::nn
