// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>

#include "pdr/nn/ops.hpp"
#include "pdr/nn/parameters.hpp"

namespace pdr::nn {

// Affine map applied to the last axis: x W + b.
struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng);
  static Linear bind(const ParameterStore& store, const std::string& name);

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const { return bias_add(matmul(x, weight), bias); }
};

}  // namespace pdr::nn
