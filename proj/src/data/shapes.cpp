// SPDX-License-Identifier: Apache-2.0
#include "pdr/data/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pdr/error.hpp"
#include "pdr/geometry/neighbors.hpp"

namespace pdr::data {

using geometry::operator+;
using geometry::operator*;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec3 unit_sphere_point(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
    const double n = geometry::norm(v);
    if (n > 1e-12) return (1.0 / n) * v;
  }
}

// Point on one of the six faces of an axis-aligned box with half extents e,
// chosen with probability proportional to face area.
Vec3 box_surface_point(const Vec3& e, std::mt19937_64& rng) {
  const double ax = 4 * e[1] * e[2], ay = 4 * e[0] * e[2], az = 4 * e[0] * e[1];
  std::discrete_distribution<int> face({ax, ax, ay, ay, az, az});
  const int f = face(rng);
  const int axis = f / 2;
  Vec3 p{uniform(rng, -e[0], e[0]), uniform(rng, -e[1], e[1]), uniform(rng, -e[2], e[2])};
  p[axis] = (f % 2 == 0) ? e[axis] : -e[axis];
  return p;
}

}  // namespace

Category parse_category(const std::string& name) {
  if (name == "sphere") return Category::sphere;
  if (name == "cuboid") return Category::cuboid;
  if (name == "cylinder") return Category::cylinder;
  if (name == "capsule") return Category::capsule;
  throw ArgumentError("unknown shape category '" + name + "'");
}

std::string to_string(Category category) {
  switch (category) {
    case Category::sphere: return "sphere";
    case Category::cuboid: return "cuboid";
    case Category::cylinder: return "cylinder";
    case Category::capsule: return "capsule";
  }
  return "unknown";
}

ShapeParams sample_shape_params(Category category, std::mt19937_64& rng) {
  ShapeParams p;
  p.category = category;
  const double target = uniform(rng, 0.6, 1.0);
  switch (category) {
    case Category::sphere:
      p.half_extents = {target, target, target};
      break;
    case Category::cuboid: {
      Vec3 e{uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0)};
      p.half_extents = (target / std::max({e[0], e[1], e[2]})) * e;
      break;
    }
    case Category::cylinder: {
      const double r = uniform(rng, 0.3, 1.0), h = uniform(rng, 0.3, 1.0);
      const double s = target / std::max(r, h);
      p.half_extents = {s * r, s * h, s * r};
      break;
    }
    case Category::capsule: {
      const double r = uniform(rng, 0.3, 0.6), h = uniform(rng, 0.2, 0.5);
      const double s = target / (r + h);
      p.half_extents = {s * r, s * h, s * r};
      break;
    }
  }
  return p;
}

PointCloud generate_shape(const ShapeParams& params, std::size_t n, std::mt19937_64& rng) {
  if (n < 16) throw ArgumentError("generate_shape: needs at least 16 points");
  const double r = params.half_extents[0], h = params.half_extents[1];
  const double two_pi = 2 * std::numbers::pi;
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (params.category) {
      case Category::sphere:
        pts.push_back(r * unit_sphere_point(rng));
        break;
      case Category::cuboid:
        pts.push_back(box_surface_point(params.half_extents, rng));
        break;
      case Category::cylinder: {
        const double lateral = 4 * std::numbers::pi * r * h, cap = std::numbers::pi * r * r;
        std::discrete_distribution<int> part({lateral, cap, cap});
        const int which = part(rng);
        const double phi = uniform(rng, 0, two_pi);
        if (which == 0) {
          pts.push_back({r * std::cos(phi), uniform(rng, -h, h), r * std::sin(phi)});
        } else {
          const double rho = r * std::sqrt(uniform(rng, 0, 1));
          pts.push_back({rho * std::cos(phi), which == 1 ? h : -h, rho * std::sin(phi)});
        }
        break;
      }
      case Category::capsule: {
        const double lateral = 4 * std::numbers::pi * r * h, ball = 4 * std::numbers::pi * r * r;
        std::discrete_distribution<int> part({lateral, ball});
        if (part(rng) == 0) {
          const double phi = uniform(rng, 0, two_pi);
          pts.push_back({r * std::cos(phi), uniform(rng, -h, h), r * std::sin(phi)});
        } else {
          const Vec3 u = unit_sphere_point(rng);
          pts.push_back(r * u + Vec3{0, u[1] >= 0 ? h : -h, 0});
        }
        break;
      }
    }
  }
  return PointCloud(std::move(pts));
}

PointCloud generate_shape(Category category, std::size_t n, std::mt19937_64& rng) {
  const auto params = sample_shape_params(category, rng);
  return generate_shape(params, n, rng);
}

PointCloud half_space_crop(const PointCloud& complete, const Vec3& view_dir, double keep_fraction) {
  if (!(keep_fraction > 0 && keep_fraction < 1)) throw ArgumentError("make_partial: keep_fraction must be in (0, 1)");
  complete.validate();
  const std::size_t n = complete.size();
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n))), 1, n);
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = geometry::dot(complete.points[i], view_dir);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] > proj[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return complete.subset(order);
}

PointCloud make_partial(const PointCloud& complete, const Vec3& view_dir, double keep_fraction,
                        std::size_t partial_size) {
  auto cropped = half_space_crop(complete, view_dir, keep_fraction);
  if (cropped.size() < partial_size) {
    throw ArgumentError("make_partial: crop kept " + std::to_string(cropped.size()) + " points, fewer than " +
                        std::to_string(partial_size));
  }
  if (cropped.size() == partial_size) return cropped;
  const auto idx = geometry::farthest_point_sample(cropped.points, partial_size);
  return cropped.subset(idx);
}

Vec3 random_unit_vector(std::mt19937_64& rng) { return unit_sphere_point(rng); }

PointCloud mirror_concat(const PointCloud& partial, int axis) {
  if (axis < 0 || axis > 2) throw ArgumentError("mirror_concat: axis must be 0, 1 or 2");
  partial.validate();
  const std::size_t n = partial.size();
  PointCloud both;
  both.points = partial.points;
  both.feature_dim = partial.feature_dim;
  both.features = partial.features;
  both.labels.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p = partial.points[i];
    p[axis] = -p[axis];
    both.points.push_back(p);
  }
  both.features.insert(both.features.end(), partial.features.begin(), partial.features.end());
  both.labels.resize(2 * n, -1);
  const auto idx = geometry::farthest_point_sample(both.points, std::max<std::size_t>(1, 3 * n / 2));
  return both.subset(idx);
}

PointCloud sample_box_conditioner(std::span<const Box> boxes, std::size_t n, std::mt19937_64& rng) {
  if (boxes.empty()) throw ArgumentError("sample_box_conditioner: no boxes");
  if (n < 6 * boxes.size()) throw ArgumentError("sample_box_conditioner: needs at least 6 points per box");
  std::vector<double> areas;
  for (const auto& b : boxes) {
    const auto& e = b.half_extents;
    if (!(e[0] > 0 && e[1] > 0 && e[2] > 0)) throw ArgumentError("sample_box_conditioner: degenerate box");
    for (int a = 0; a < 3; ++a) {
      const double area = 4 * e[(a + 1) % 3] * e[(a + 2) % 3];
      areas.push_back(area);
      areas.push_back(area);
    }
  }
  std::discrete_distribution<std::size_t> face(areas.begin(), areas.end());
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = face(rng);
    const Box& b = boxes[f / 6];
    const int a = static_cast<int>(f % 6) / 2;
    const double sign = (f % 2 == 0) ? 1.0 : -1.0;
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    const double su = uniform(rng, -1, 1), sv = uniform(rng, -1, 1);
    pts.push_back(b.center + (sign * b.half_extents[a]) * b.axes[a] + (su * b.half_extents[u]) * b.axes[u] +
                  (sv * b.half_extents[v]) * b.axes[v]);
  }
  return PointCloud(std::move(pts));
}

}  // namespace pdr::data
