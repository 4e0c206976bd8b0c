// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdr/data/augment.hpp"
#include "pdr/data/shapes.hpp"

namespace pdr::data {

struct DatasetPair {
  PointCloud partial;   // conditioner c
  PointCloud complete;  // x0
  std::string shape_id;
  std::string view_id;
  std::string category;
  std::string split = "train";
  std::vector<PointCloud> coarse;  // cached coarse completions, possibly empty
};

// Same transform on both clouds and on every cached coarse cloud.
DatasetPair augment(const DatasetPair& pair, const AugmentConfig& config, std::mt19937_64& rng);

struct DatasetConfig {
  std::size_t train_shapes = 8;  // per category
  std::size_t eval_shapes = 2;   // per category
  std::size_t views = 2;         // partial views per shape
  std::size_t complete_points = 256;
  std::size_t partial_points = 128;
  double keep_fraction = 0.6;
  bool mirror = true;  // mirror-concat partials, giving 3/2 partial_points labeled points
  std::vector<Category> categories{kCategories.begin(), kCategories.end()};

  void validate() const;
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

std::vector<DatasetPair> generate_dataset(const DatasetConfig& config, std::uint64_t seed);

inline constexpr int kManifestVersion = 1;

// Writes <dir>/manifest.json plus one PDRC file per cloud.
void save_pairs(const std::filesystem::path& dir, const std::vector<DatasetPair>& pairs);
// Accepts the manifest file or its directory.
std::vector<DatasetPair> load_pairs(const std::filesystem::path& path);
// Directory of <id>_partial.ply / <id>_complete.ply files.
std::vector<DatasetPair> load_ply_pairs(const std::filesystem::path& dir);

std::vector<DatasetPair> select_split(const std::vector<DatasetPair>& pairs, const std::string& split);

}  // namespace pdr::data
