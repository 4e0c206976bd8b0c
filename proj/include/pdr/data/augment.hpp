// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "pdr/geometry/point_cloud.hpp"

namespace pdr::data {

using geometry::PointCloud;
using geometry::Vec3;

enum class Axis { x = 0, y = 1, z = 2 };

struct AugmentConfig {
  double rotation_limit_deg = 0;  // a
  double mirror_prob = 0;         // m, split m/2 per mirror plane
  double translation_std = 0;     // sigma
  double scale_low = 1;
  double scale_high = 1;
  Axis up_axis = Axis::y;

  void validate() const;
  nlohmann::json to_json() const;
  static AugmentConfig from_json(const nlohmann::json& j);

  static AugmentConfig cgnet_preset();   // a = 90, m = 0.5, sigma = 0.1, scale [1/1.2, 1.2]
  static AugmentConfig rfnet_preset();   // a = 3, m = 0.5, sigma = 0.005, scale [1/1.01, 1.01]
  static AugmentConfig identity() { return {}; }
};

using Mat3 = std::array<Vec3, 3>;  // rows

// x -> scale * (R M x) + translation
struct Transform {
  Mat3 linear{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};  // rotation times mirrors
  double scale = 1;
  Vec3 translation{0, 0, 0};

  Vec3 apply(const Vec3& p) const;
  PointCloud apply(const PointCloud& cloud) const;
};

// Draws the angle, the two mirror coins, the translation and the scale, in that order.
Transform sample_transform(const AugmentConfig& config, std::mt19937_64& rng);

}  // namespace pdr::data
