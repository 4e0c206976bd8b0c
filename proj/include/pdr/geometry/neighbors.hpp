// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pdr/geometry/point_cloud.hpp"
#include "pdr/nn/tensor.hpp"

namespace pdr::geometry {

// Fixed-width neighbor lists. Slot (i, j) holds a source index, or -1 for a
// dummy that sits at the center with zero features.
struct NeighborTable {
  std::size_t center_count = 0;
  std::size_t k = 0;
  std::vector<std::int64_t> indices;  // center_count * k
  std::vector<std::uint8_t> real;     // 1 for a real slot, 0 for a dummy

  std::int64_t index(std::size_t center, std::size_t slot) const { return indices[center * k + slot]; }
  bool is_dummy(std::size_t center, std::size_t slot) const { return real[center * k + slot] == 0; }
  std::size_t real_count(std::size_t center) const;
  std::size_t total_real() const;
};

// Real slots only, packed center by center. Rows offsets[i]..offsets[i+1]
// belong to center i.
struct CompactNeighbors {
  std::vector<std::size_t> offsets;
  std::vector<std::int64_t> sources;
  std::vector<std::size_t> centers;  // owning center per row
};

CompactNeighbors compact(const NeighborTable& table);

// Greedy max-min subset. Seeds at the lexicographically smallest point and
// breaks distance ties toward the lower index.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m);

// All sources within `radius` of each center (inclusive). Candidates are
// ordered by (distance, x, y, z, index); more than k are reduced to a
// uniform random k-subset (one draw from `rng` keys a per-center stream, so
// the result does not depend on center order); fewer are padded with dummies.
NeighborTable ball_query(std::span<const Vec3> sources, std::span<const Vec3> centers, double radius,
                         std::size_t k, std::mt19937_64& rng);

// Exact k nearest sources per center, ties toward the lower index.
NeighborTable knn_query(std::span<const Vec3> sources, std::span<const Vec3> centers, std::size_t k);

// source - center per slot, zero for dummies; [center_count * k * 3].
std::vector<double> relative_offsets(const NeighborTable& table, std::span<const Vec3> centers,
                                     std::span<const Vec3> sources);

// [M, K, d + 3] grouped matrix: source feature row followed by the offset
// from the center. Dummy slots are all zero. Differentiable in `features`.
nn::Tensor group(const nn::Tensor& features, const NeighborTable& table, std::span<const Vec3> centers,
                 std::span<const Vec3> sources);

// Inverse-squared-distance blend of the three nearest coarse features. A
// fine point that coincides with a coarse point copies its feature.
std::vector<double> three_interpolate(std::span<const Vec3> coarse_positions,
                                      std::span<const double> coarse_features, std::size_t feature_dim,
                                      std::span<const Vec3> fine_positions);

}  // namespace pdr::geometry
