// SPDX-License-Identifier: Apache-2.0
#include "pdr/data/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pdr/error.hpp"
#include "pdr/geometry/cloud_io.hpp"

namespace pdr::data {

namespace fs = std::filesystem;

DatasetPair augment(const DatasetPair& pair, const AugmentConfig& config, std::mt19937_64& rng) {
  const auto t = sample_transform(config, rng);
  DatasetPair out = pair;
  out.partial = t.apply(pair.partial);
  out.complete = t.apply(pair.complete);
  for (auto& c : out.coarse) c = t.apply(c);
  return out;
}

void DatasetConfig::validate() const {
  if (complete_points < 16) throw ConfigError("dataset config: complete_points must be >= 16");
  if (partial_points == 0 || partial_points > complete_points) {
    throw ConfigError("dataset config: partial_points must be in [1, complete_points]");
  }
  if (!(keep_fraction > 0 && keep_fraction < 1)) throw ConfigError("dataset config: keep_fraction must be in (0, 1)");
  if (static_cast<double>(partial_points) > keep_fraction * static_cast<double>(complete_points) + 1) {
    throw ConfigError("dataset config: keep_fraction leaves fewer than partial_points points");
  }
  if (views == 0) throw ConfigError("dataset config: views must be >= 1");
  if (categories.empty()) throw ConfigError("dataset config: no categories");
}

nlohmann::json DatasetConfig::to_json() const {
  std::vector<std::string> cats;
  for (auto c : categories) cats.push_back(to_string(c));
  return {{"train_shapes", train_shapes}, {"eval_shapes", eval_shapes},       {"views", views},
          {"complete_points", complete_points}, {"partial_points", partial_points}, {"keep_fraction", keep_fraction},
          {"mirror", mirror},           {"categories", cats}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
  DatasetConfig c;
  try {
    if (j.contains("train_shapes")) j.at("train_shapes").get_to(c.train_shapes);
    if (j.contains("eval_shapes")) j.at("eval_shapes").get_to(c.eval_shapes);
    if (j.contains("views")) j.at("views").get_to(c.views);
    if (j.contains("complete_points")) j.at("complete_points").get_to(c.complete_points);
    if (j.contains("partial_points")) j.at("partial_points").get_to(c.partial_points);
    if (j.contains("keep_fraction")) j.at("keep_fraction").get_to(c.keep_fraction);
    if (j.contains("mirror")) j.at("mirror").get_to(c.mirror);
    if (j.contains("categories")) {
      c.categories.clear();
      for (const auto& s : j.at("categories")) c.categories.push_back(parse_category(s.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<DatasetPair> generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::vector<DatasetPair> pairs;
  for (const char* split : {"train", "eval"}) {
    const std::size_t shapes = std::string(split) == "train" ? config.train_shapes : config.eval_shapes;
    for (auto category : config.categories) {
      for (std::size_t s = 0; s < shapes; ++s) {
        const auto params = sample_shape_params(category, rng);
        const auto complete = generate_shape(params, config.complete_points, rng);
        char id[64];
        std::snprintf(id, sizeof id, "%s-%s-%03zu", to_string(category).c_str(), split, s);
        for (std::size_t v = 0; v < config.views; ++v) {
          const Vec3 dir = random_unit_vector(rng);
          auto partial = make_partial(complete, dir, config.keep_fraction, config.partial_points);
          if (config.mirror) partial = mirror_concat(partial, 2);
          DatasetPair pair;
          pair.partial = std::move(partial);
          pair.complete = complete;
          pair.shape_id = id;
          pair.view_id = std::to_string(v);
          pair.category = to_string(category);
          pair.split = split;
          pairs.push_back(std::move(pair));
        }
      }
    }
  }
  return pairs;
}

void save_pairs(const fs::path& dir, const std::vector<DatasetPair>& pairs) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& p : pairs) {
    const std::string base = p.shape_id + "_" + p.view_id;
    const std::string partial_file = "clouds/" + base + ".partial.pdrc";
    const std::string complete_file = "clouds/" + base + ".complete.pdrc";
    geometry::save_cloud(dir / partial_file, p.partial);
    geometry::save_cloud(dir / complete_file, p.complete);
    nlohmann::json coarse = nlohmann::json::array();
    for (std::size_t k = 0; k < p.coarse.size(); ++k) {
      const std::string f = "coarse/" + base + ".coarse" + std::to_string(k) + ".pdrc";
      geometry::save_cloud(dir / f, p.coarse[k]);
      coarse.push_back(f);
    }
    entries.push_back({{"shape_id", p.shape_id},
                       {"view_id", p.view_id},
                       {"category", p.category},
                       {"split", p.split},
                       {"partial_file", partial_file},
                       {"complete_file", complete_file},
                       {"coarse_files", coarse}});
  }
  const nlohmann::json manifest{{"version", kManifestVersion}, {"pairs", entries}};
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("save_pairs: cannot write " + (dir / "manifest.json").string());
}

std::vector<DatasetPair> load_pairs(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  const fs::path root = manifest_path.parent_path();
  std::ifstream in(manifest_path);
  if (!in) throw IoError("load_pairs: cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_pairs: " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("version", -1) != kManifestVersion) {
    throw IoError("load_pairs: unsupported manifest version in " + manifest_path.string());
  }
  std::vector<DatasetPair> pairs;
  try {
    for (const auto& e : manifest.at("pairs")) {
      DatasetPair p;
      p.shape_id = e.at("shape_id").get<std::string>();
      p.view_id = e.at("view_id").get<std::string>();
      p.category = e.value("category", "");
      p.split = e.value("split", "train");
      p.partial = geometry::load_cloud(root / e.at("partial_file").get<std::string>());
      p.complete = geometry::load_cloud(root / e.at("complete_file").get<std::string>());
      if (e.contains("coarse_files")) {
        for (const auto& f : e.at("coarse_files")) p.coarse.push_back(geometry::load_cloud(root / f.get<std::string>()));
      }
      pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_pairs: malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return pairs;
}

std::vector<DatasetPair> load_ply_pairs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("load_ply_pairs: not a directory: " + dir.string());
  const std::string suffix = "_partial.ply";
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  std::vector<DatasetPair> pairs;
  for (const auto& id : ids) {
    const auto complete = dir / (id + "_complete.ply");
    if (!fs::exists(complete)) throw IoError("load_ply_pairs: missing " + complete.string());
    DatasetPair p;
    p.partial = geometry::load_ply(dir / (id + suffix));
    p.complete = geometry::load_ply(complete);
    p.shape_id = id;
    p.view_id = "0";
    p.category = "external";
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<DatasetPair> select_split(const std::vector<DatasetPair>& pairs, const std::string& split) {
  std::vector<DatasetPair> out;
  std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
               [&](const DatasetPair& p) { return p.split == split; });
  return out;
}

}  // namespace pdr::data
