// SPDX-License-Identifier: Apache-2.0
#include "pdr/nn/optim.hpp"

#include <cmath>

#include "pdr/error.hpp"

namespace pdr::nn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  if (!(config.lr > 0)) throw ConfigError("Adam learning rate must be positive");
  if (grads.size() != params.size()) throw DimensionError("adam_step: gradient and parameter sizes differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: optimizer state size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Adam::Adam(const ParameterStore& params, AdamConfig config) : config_(config), states_(params.size()) {
  if (!(config.lr > 0)) throw ConfigError("Adam learning rate must be positive");
}

void Adam::step(ParameterStore& params, const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params.size() || states_.size() != params.size()) {
    throw DimensionError("Adam::step: expected one gradient buffer per parameter");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adam_step(params.tensors()[i].mutable_values(), grads[i], states_[i], config_);
  }
}

}  // namespace pdr::nn
