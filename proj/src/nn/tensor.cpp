// SPDX-License-Identifier: Apache-2.0
#include "pdr/nn/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "pdr/error.hpp"

namespace pdr::nn {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (element_count(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " holds " +
                         std::to_string(element_count(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) {
  const auto n = element_count(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw TapeError("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return element_count(shape()); }

std::span<const double> Tensor::values() const {
  if (!node_) throw TapeError("use of an undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

std::span<double> Tensor::mutable_values() {
  if (!is_leaf()) throw TapeError("only leaf tensors may be modified in place");
  return node_->value;
}

std::size_t Tape::entry_for(const std::shared_ptr<TensorNode>& node) {
  auto [it, inserted] = index_.try_emplace(node.get(), entries_.size());
  if (inserted) entries_.push_back({node, {}});
  return it->second;
}

Tensor Tape::record(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                    BackwardFn backward) {
  if (consumed_) throw TapeError("recording on a tape that already ran backward; call reset()");
  Tensor out = Tensor::constant(std::move(shape), std::move(value));
  out.node_->requires_grad = true;
  out.node_->tape = this;

  Record rec;
  rec.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    rec.inputs.push_back(in.requires_grad() ? entry_for(in.node()) : npos);
  }
  rec.output = entry_for(out.node_);
  rec.backward = std::move(backward);
  records_.push_back(std::move(rec));
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.tape() != this) {
    throw TapeError("backward() on a tensor that was not recorded on this tape");
  }
  if (loss.numel() != 1) {
    throw TapeError("backward() requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (consumed_) throw TapeError("backward() called twice on the same tape without reset()");
  consumed_ = true;

  // Gradient buffers are allocated when first reached; untouched entries stay empty.
  std::vector<bool> touched(entries_.size(), false);
  const auto loss_id = index_.at(loss.node().get());
  entries_[loss_id].grad.assign(1, 1.0);
  touched[loss_id] = true;

  std::vector<std::span<double>> grad_inputs;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!touched[it->output]) continue;
    grad_inputs.clear();
    for (auto id : it->inputs) {
      if (id == npos) {
        grad_inputs.emplace_back();
      } else {
        auto& e = entries_[id];
        if (!touched[id]) {
          e.grad.assign(e.node->value.size(), 0.0);
          touched[id] = true;
        }
        grad_inputs.emplace_back(e.grad);
      }
    }
    it->backward(entries_[it->output].grad, grad_inputs);
  }
}

std::vector<double> Tape::grad(const Tensor& tensor) const {
  auto it = index_.find(tensor.node().get());
  if (it == index_.end() || entries_[it->second].grad.empty()) {
    return std::vector<double>(tensor.numel(), 0.0);
  }
  return entries_[it->second].grad;
}

bool Tape::has_grad(const Tensor& tensor) const {
  auto it = index_.find(tensor.node().get());
  return it != index_.end() && !entries_[it->second].grad.empty();
}

void Tape::reset() {
  entries_.clear();
  index_.clear();
  records_.clear();
  consumed_ = false;
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tensor make_result(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                   Tape::BackwardFn backward) {
  Tape* tape = Tape::active();
  const bool needs_grad =
      tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                     [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return Tensor::constant(std::move(shape), std::move(value));
  return tape->record(std::move(shape), std::move(value), inputs, std::move(backward));
}

}  // namespace pdr::nn
