// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdr/denoiser/config.hpp"
#include "pdr/denoiser/modules.hpp"
#include "pdr/geometry/point_cloud.hpp"
#include "pdr/nn/parameters.hpp"

namespace pdr::denoiser {

// Condition subnet output for one partial cloud: features at every level
// (input first) and the global feature. Independent of the noisy input, so
// a reverse process encodes the condition once.
struct ConditionEncoding {
  std::vector<LevelFeatures> levels;
  nn::Tensor global;  // [global_feature_dim]
};

// Attention traces of one forward, in call order.
using ForwardTrace = std::vector<AttentionTrace>;

// Dual-path network. CGNet when config.use_step_embedding is set, RFNet
// otherwise. Copies share parameters.
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& config, std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }

  // Level-0 condition features are the labels (zeros when the cloud has
  // none) followed by the coordinates.
  ConditionEncoding encode_condition(const geometry::PointCloud& c) const;

  // Head output [N, output_dim]. `t` is required for CGNet and ignored by RFNet.
  nn::Tensor forward(std::span<const Vec3> x, const ConditionEncoding& condition, std::optional<std::size_t> t,
                     ForwardTrace* trace = nullptr) const;

 private:
  DenoiserConfig config_;
  nn::ParameterStore params_;
  std::vector<SetAbstraction> condition_sa_;
  std::vector<SetAbstraction> denoise_sa_;
  std::vector<FeatureTransfer> transfer_;  // 2L + 1, encoder levels then decoder
  std::vector<FeaturePropagation> propagation_;  // index l maps level l + 1 to level l
  std::optional<StepEncoder> step_;
  GlobalEncoder global_;
  nn::Linear head_hidden_, head_out_;
};

// eps_theta(x_t, c, t): [N, 3].
nn::Tensor cgnet_forward(const Denoiser& net, const geometry::PointCloud& x_t, const geometry::PointCloud& c,
                         std::size_t t);

struct Refinement {
  nn::Tensor refined;  // v = u + gamma * displacement, [N, 3]
  nn::Tensor dense;    // [N * lambda, 3], rows i * lambda + j surround v_i
  nn::Tensor head;     // raw head output [N, 3 (1 + lambda)]
};

Refinement rfnet_forward(const Denoiser& net, const geometry::PointCloud& u, const geometry::PointCloud& c);
// Same, reusing a condition encoding.
Refinement rfnet_forward(const Denoiser& net, std::span<const Vec3> u, const ConditionEncoding& condition);

}  // namespace pdr::denoiser
