// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdr/nn/parameters.hpp"

namespace pdr::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of a flat buffer. State buffers are sized
// on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

class Adam {
 public:
  Adam(const ParameterStore& params, AdamConfig config);

  // grads[i] matches params.tensors()[i].
  void step(ParameterStore& params, const std::vector<std::vector<double>>& grads);
  std::uint64_t steps_taken() const { return states_.empty() ? 0 : states_.front().step; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<AdamState> states_;
};

}  // namespace pdr::nn
