// SPDX-License-Identifier: Apache-2.0
#include "pdr/geometry/point_cloud.hpp"

#include <cmath>
#include <limits>

#include "pdr/error.hpp"

namespace pdr::geometry {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void PointCloud::validate() const {
  if (points.empty()) throw ArgumentError("point cloud is empty");
  for (const auto& p : points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw ArgumentError("point cloud has non-finite coordinates");
    }
  }
  if (features.size() != points.size() * feature_dim) {
    throw ArgumentError("point cloud feature matrix has " + std::to_string(features.size()) + " values for " +
                        std::to_string(points.size()) + " x " + std::to_string(feature_dim));
  }
  if (!labels.empty()) {
    if (labels.size() != points.size()) throw ArgumentError("point cloud label count differs from point count");
    for (auto l : labels)
      if (l != 1 && l != -1) throw ArgumentError("point cloud labels must be +1 or -1");
  }
}

nn::Tensor PointCloud::positions_tensor() const {
  if (points.empty()) throw ArgumentError("point cloud is empty");
  std::vector<double> v(points.size() * 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int a = 0; a < 3; ++a) v[i * 3 + a] = points[i][a];
  return nn::Tensor::constant({points.size(), 3}, std::move(v));
}

PointCloud PointCloud::from_tensor(const nn::Tensor& positions) {
  if (positions.rank() != 2 || positions.dim(1) != 3) {
    throw DimensionError("expected an [N, 3] position tensor, got " + nn::shape_string(positions.shape()));
  }
  PointCloud out;
  out.points.resize(positions.dim(0));
  const auto v = positions.values();
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] = {v[i * 3], v[i * 3 + 1], v[i * 3 + 2]};
  return out;
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.feature_dim = feature_dim;
  out.points.reserve(indices.size());
  for (auto i : indices) {
    if (i >= points.size()) throw ArgumentError("subset index out of range");
    out.points.push_back(points[i]);
    out.features.insert(out.features.end(), features.begin() + static_cast<std::ptrdiff_t>(i * feature_dim),
                        features.begin() + static_cast<std::ptrdiff_t>((i + 1) * feature_dim));
    if (!labels.empty()) out.labels.push_back(labels[i]);
  }
  return out;
}

std::pair<Vec3, Vec3> bounding_box(std::span<const Vec3> points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  return {lo, hi};
}

bool inside_unit_cube(std::span<const Vec3> points, double tolerance) {
  for (const auto& p : points)
    for (double c : p)
      if (std::abs(c) > 1.0 + tolerance) return false;
  return true;
}

}  // namespace pdr::geometry
