// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pdr/nn/tensor.hpp"

namespace pdr::geometry {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}
double norm(const Vec3& a);

// Ordered 3D points with optional per-point features and +-1 provenance labels.
struct PointCloud {
  std::vector<Vec3> points;
  std::size_t feature_dim = 0;
  std::vector<double> features;     // points.size() * feature_dim, row-major
  std::vector<std::int8_t> labels;  // empty, or one of {-1, +1} per point

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return !labels.empty(); }

  // Throws ArgumentError on empty clouds, non-finite coordinates or
  // inconsistent feature/label sizes.
  void validate() const;

  // [N, 3] constant tensor of coordinates.
  nn::Tensor positions_tensor() const;
  static PointCloud from_tensor(const nn::Tensor& positions);

  PointCloud subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

// Per-axis min and max corners.
std::pair<Vec3, Vec3> bounding_box(std::span<const Vec3> points);
bool inside_unit_cube(std::span<const Vec3> points, double tolerance = 0.0);

}  // namespace pdr::geometry
