// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pdr/geometry/point_cloud.hpp"

namespace pdr::data {

using geometry::PointCloud;
using geometry::Vec3;

enum class Category { sphere, cuboid, cylinder, capsule };

inline constexpr std::array<Category, 4> kCategories{Category::sphere, Category::cuboid, Category::cylinder,
                                                     Category::capsule};

Category parse_category(const std::string& name);
std::string to_string(Category category);

// Surface dimensions before sampling. Axes of revolution run along y.
struct ShapeParams {
  Category category = Category::sphere;
  Vec3 half_extents{1, 1, 1};  // cuboid half sizes; radius in [0], half height in [1] otherwise
};

// Random proportions with the largest half extent in [0.6, 1].
ShapeParams sample_shape_params(Category category, std::mt19937_64& rng);

// n points, area-uniform on the surface, centered at the origin.
PointCloud generate_shape(const ShapeParams& params, std::size_t n, std::mt19937_64& rng);
PointCloud generate_shape(Category category, std::size_t n, std::mt19937_64& rng);

// Points on the far side of the plane orthogonal to view_dir: the top
// ceil(keep_fraction * n) projections onto view_dir (ties to lower index),
// in original order.
PointCloud half_space_crop(const PointCloud& complete, const Vec3& view_dir, double keep_fraction);
// Crop followed by FPS down to partial_size (no resampling when the crop is
// already that small).
PointCloud make_partial(const PointCloud& complete, const Vec3& view_dir, double keep_fraction,
                        std::size_t partial_size);

Vec3 random_unit_vector(std::mt19937_64& rng);

// Reflects the partial by negating coordinate `axis`, labels originals +1 and
// reflections -1, then FPS-subsamples the 2N points to 3N/2.
PointCloud mirror_concat(const PointCloud& partial, int axis = 2);

// Box with center, half extents and a rotation (rows are the box axes in world space).
struct Box {
  Vec3 center{0, 0, 0};
  Vec3 half_extents{0.5, 0.5, 0.5};
  std::array<Vec3, 3> axes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
};

// Area-uniform points over the union of the box surfaces.
PointCloud sample_box_conditioner(std::span<const Box> boxes, std::size_t n, std::mt19937_64& rng);

}  // namespace pdr::data
