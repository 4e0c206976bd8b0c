// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pdr::denoiser {

enum class StepEncoding {
  increasing,  // psi_i(t) = 10^(4 i / d_t) t
  decreasing,  // psi_i(t) = 10^(-4 i / d_t) t
};

// Architecture hyperparameters for the dual-path network. With L levels the
// point ladders hold L + 1 counts (input first) and the FT ladder holds
// 2L + 1 radii (encoder levels 0..L, then decoder levels L-1..0).
struct DenoiserConfig {
  std::vector<std::size_t> denoise_points{256, 128, 64, 32, 16};
  std::vector<std::size_t> condition_points{192, 96, 48, 24, 12};
  std::vector<std::size_t> feature_dims{32, 64, 128, 256};    // denoise SA outputs, levels 1..L
  std::vector<std::size_t> condition_dims{32, 64, 128, 256};  // condition SA outputs, levels 1..L
  std::vector<std::size_t> decoder_dims{32, 32, 64, 128};     // FP outputs at levels 0..L-1
  std::vector<std::size_t> transfer_dims{16, 32, 64, 128, 256, 128, 64, 32, 16};  // per FT module
  std::vector<double> sa_radii{0.1, 0.2, 0.4, 0.8};
  std::vector<double> ft_radii{0.1, 0.2, 0.4, 0.8, 1.6, 0.8, 0.4, 0.2, 0.1};
  std::size_t k_sa = 32;
  std::size_t k_ft = 32;
  std::size_t k_fp = 8;
  std::size_t pos_encode_dim = 64;  // d_t; the raw encoding has 2 d_t entries
  StepEncoding step_encoding = StepEncoding::increasing;
  std::size_t step_embed_dim = 512;
  std::vector<std::size_t> global_stage1{64, 128};  // per-point widths before the first pooling
  std::size_t global_stage2_hidden = 256;
  std::size_t global_feature_dim = 1024;
  std::size_t query_dim = 32;
  std::size_t key_dim = 32;
  std::size_t head_hidden = 64;
  std::size_t condition_input_dim = 1;  // per-point condition features beyond xyz (mirror labels)
  bool use_step_embedding = true;
  std::size_t upsample_factor = 1;   // lambda, refinement only
  double displacement_scale = 0.001;  // gamma, refinement only
  std::uint64_t neighbor_seed = 0x5eed;

  std::size_t levels() const { return feature_dims.size(); }
  // Width of the network head: 3 for noise prediction, 3 (1 + lambda) for refinement.
  std::size_t output_dim() const { return use_step_embedding ? 3 : 3 * (1 + upsample_factor); }

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  nlohmann::json to_json() const;
  static DenoiserConfig from_json(const nlohmann::json& j);

  // "desk", "paper-scale", "tiny" (gradient checks) and "toy" (end-to-end runs).
  static DenoiserConfig preset(const std::string& name);
  // Same architecture with refinement settings (no step embedding).
  DenoiserConfig as_refiner(std::size_t lambda, double gamma) const;
};

// Point count at `level` for an input of n points, preserving the ladder's ratios.
std::size_t level_point_count(const std::vector<std::size_t>& ladder, std::size_t level, std::size_t n);

}  // namespace pdr::denoiser
