// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

#include "pdr/geometry/point_cloud.hpp"

namespace pdr::geometry {

// "PDRC" layout: magic, u32 version, u64 N, u32 feature dim (0 if none),
// u8 has-labels, 3N f64 positions, N*dim f64 features, N i8 labels.
inline constexpr std::uint32_t kCloudVersion = 1;

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_cloud(const std::filesystem::path& path);

// ASCII PLY with "x y z" vertex properties; other properties are ignored on read.
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_ply(const std::filesystem::path& path);

}  // namespace pdr::geometry
