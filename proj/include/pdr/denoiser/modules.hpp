// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pdr/denoiser/config.hpp"
#include "pdr/geometry/neighbors.hpp"
#include "pdr/nn/layers.hpp"

namespace pdr::denoiser {

using geometry::Vec3;

// Points of one hierarchy level and their feature rows [n, d].
struct LevelFeatures {
  std::vector<Vec3> positions;
  nn::Tensor features;

  std::size_t size() const { return positions.size(); }
  std::size_t dim() const { return features.dim(1); }
};

// [n, d] -> [n, d + 3] with the absolute coordinates appended.
nn::Tensor append_positions(const nn::Tensor& features, std::span<const Vec3> positions);
nn::Tensor positions_matrix(std::span<const Vec3> positions);

// Per-point MLP with Swish after every layer. When built with a context
// width, a learned projection of the context vector is added to the output
// of each hidden layer before its activation.
class SharedMlp {
 public:
  static SharedMlp create(nn::ParameterStore& store, const std::string& name, std::vector<std::size_t> widths,
                          std::size_t context_dim, std::mt19937_64& rng);

  // x: [..., widths.front()]; context: [context_dim] or undefined.
  nn::Tensor operator()(const nn::Tensor& x, const nn::Tensor& context) const;
  // Same, starting from the pre-activation of the first layer.
  nn::Tensor from_first_preactivation(const nn::Tensor& h, const nn::Tensor& context) const;

  const nn::Linear& first() const { return layers_.front(); }
  std::size_t out_dim() const { return layers_.back().out_features(); }

 private:
  nn::Tensor inject(const nn::Tensor& h, std::size_t layer, const nn::Tensor& context) const;

  std::vector<nn::Linear> layers_;
  std::vector<nn::Linear> projections_;  // one per hidden layer, empty without context
};

// Attention weights of one aggregation, laid out [centers, k, channels]
// with the slot mask used to produce them.
struct AttentionTrace {
  nn::Tensor weights;
  std::vector<std::uint8_t> real;
  std::size_t k = 0;
};

// Neighborhood aggregation: keys come from the grouped input, values from
// the shared MLP output, queries from the center features. Scores are
// per channel and normalized over the real slots of each center only.
class Attention {
 public:
  static Attention create(nn::ParameterStore& store, const std::string& name, std::size_t query_in,
                          std::size_t key_in, std::size_t value_dim, std::size_t query_dim, std::size_t key_dim,
                          std::mt19937_64& rng);

  // Dense layout: g_in [m, k, key_in], g_out [m, k, c], queries [m, query_in],
  // real_mask [m * k]. Returns [m, c]; all-dummy centers give zero rows.
  nn::Tensor dense(const nn::Tensor& g_in, const nn::Tensor& g_out, const nn::Tensor& queries,
                   std::span<const std::uint8_t> real_mask, AttentionTrace* trace = nullptr) const;

  // Ragged layout over real slots only. key_pre holds the key layer's
  // pre-activation per row [r, key_dim]; values [r, c]; offsets per center.
  nn::Tensor ragged(const nn::Tensor& key_pre, const nn::Tensor& values, const nn::Tensor& queries,
                    std::span<const std::size_t> offsets) const;

  const nn::Linear& key_layer() const { return key_; }

 private:
  nn::Tensor scores(const nn::Tensor& q_rows, const nn::Tensor& k_rows) const;

  nn::Linear query_, key_, score_hidden_, score_out_;
};

// Neighbor rows of one grouping in ragged form, plus the dense table.
struct Grouping {
  geometry::NeighborTable table;
  geometry::CompactNeighbors rows;
  nn::Tensor offsets;  // [r, 3] source minus center, constant
};

Grouping make_grouping(geometry::NeighborTable table, std::span<const Vec3> centers,
                       std::span<const Vec3> sources);

// Applies `layer` to the grouped rows [source features, offset] without
// materializing them: gather(features W_f) + offsets W_p + b.
nn::Tensor grouped_linear(const nn::Linear& layer, const nn::Tensor& features, const Grouping& grouping);

// Set Abstraction: FPS to out_count centers, ball query, shared MLP on the
// grouped rows, attention with the center's own features as queries. The
// result carries the center coordinates appended.
class SetAbstraction {
 public:
  static SetAbstraction create(nn::ParameterStore& store, const std::string& name, std::size_t in_dim,
                               std::size_t out_dim, std::size_t context_dim, double radius, std::size_t k,
                               std::uint64_t seed, const DenoiserConfig& config, std::mt19937_64& rng);

  LevelFeatures operator()(const LevelFeatures& in, std::size_t out_count, const nn::Tensor& context,
                           AttentionTrace* trace = nullptr) const;

  std::size_t out_dim() const { return mlp_.out_dim() + 3; }

 private:
  std::size_t in_dim_ = 0;
  double radius_ = 0;
  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  SharedMlp mlp_;
  Attention attention_;
};

// Feature Transfer: each denoise point gathers condition features within
// `radius`. Returns [n, out_dim] without coordinates; points with no
// condition neighbor receive zeros.
class FeatureTransfer {
 public:
  static FeatureTransfer create(nn::ParameterStore& store, const std::string& name, std::size_t condition_dim,
                                std::size_t query_dim_in, std::size_t out_dim, double radius, std::size_t k,
                                std::uint64_t seed, const DenoiserConfig& config, std::mt19937_64& rng);

  nn::Tensor operator()(const LevelFeatures& condition, std::span<const Vec3> positions,
                        const nn::Tensor& queries, AttentionTrace* trace = nullptr) const;

  std::size_t out_dim() const { return mlp_.out_dim(); }
  double radius() const { return radius_; }

 private:
  std::size_t condition_dim_ = 0;
  double radius_ = 0;
  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  SharedMlp mlp_;
  Attention attention_;
};

// PA-Deconv feature propagation: each fine point attends over its k nearest
// coarse points, the result is joined with the skip features and passed
// through a two-layer unit MLP. The output carries coordinates appended.
class FeaturePropagation {
 public:
  static FeaturePropagation create(nn::ParameterStore& store, const std::string& name, std::size_t coarse_dim,
                                   std::size_t skip_dim, std::size_t out_dim, std::size_t context_dim,
                                   std::size_t k, const DenoiserConfig& config, std::mt19937_64& rng);

  nn::Tensor operator()(const LevelFeatures& coarse, std::span<const Vec3> fine_positions,
                        const nn::Tensor& skip, const nn::Tensor& context, AttentionTrace* trace = nullptr) const;

  std::size_t out_dim() const { return unit_.out_dim() + 3; }

 private:
  std::size_t coarse_dim_ = 0;
  std::size_t k_ = 0;
  SharedMlp mlp_;
  Attention attention_;
  SharedMlp unit_;
};

// Raw sinusoidal step encoding [sin(psi), cos(psi)] of length 2 d_t.
std::vector<double> raw_step_encoding(std::size_t t, std::size_t d_t, StepEncoding encoding);

// Positional encoding followed by two FC + Swish layers.
class StepEncoder {
 public:
  static StepEncoder create(nn::ParameterStore& store, const std::string& name, const DenoiserConfig& config,
                            std::mt19937_64& rng);
  nn::Tensor operator()(std::size_t t) const;  // [step_embed_dim]

 private:
  std::size_t d_t_ = 0;
  StepEncoding encoding_ = StepEncoding::increasing;
  nn::Linear fc1_, fc2_;
};

// Two-stage PointNet: per-point MLP and max-pool, pooled vector appended to
// every point, second MLP and max-pool.
class GlobalEncoder {
 public:
  static GlobalEncoder create(nn::ParameterStore& store, const std::string& name, std::size_t in_dim,
                              const DenoiserConfig& config, std::mt19937_64& rng);
  nn::Tensor operator()(const nn::Tensor& points) const;  // [n, in_dim] -> [global_feature_dim]

 private:
  SharedMlp stage1_;
  nn::Linear stage2_hidden_, stage2_out_;
};

}  // namespace pdr::denoiser
