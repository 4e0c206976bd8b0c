// SPDX-License-Identifier: Apache-2.0
#include "pdr/geometry/cloud_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pdr/binary_io.hpp"
#include "pdr/error.hpp"

namespace pdr::geometry {

namespace {
constexpr std::string_view kMagic = "PDRC";
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  io::Writer w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCloudVersion);
  w.put<std::uint64_t>(cloud.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.feature_dim));
  w.put<std::uint8_t>(cloud.has_labels() ? 1 : 0);
  std::vector<double> pos;
  pos.reserve(cloud.size() * 3);
  for (const auto& p : cloud.points) pos.insert(pos.end(), p.begin(), p.end());
  w.put_array(pos);
  w.put_array(cloud.features);
  w.put_array(cloud.labels);
  w.write_to(path);
}

PointCloud load_cloud(const std::filesystem::path& path) {
  io::Reader r(path);
  if (r.get_bytes(kMagic.size()) != kMagic) r.fail_format("bad point cloud magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCloudVersion) r.fail_format("unsupported point cloud version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint32_t>();
  const auto has_labels = r.get<std::uint8_t>();
  if (has_labels > 1) r.fail_format("invalid has-labels flag");
  PointCloud cloud;
  const auto pos = r.get_array<double>(n * 3);
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) cloud.points[i] = {pos[i * 3], pos[i * 3 + 1], pos[i * 3 + 2]};
  cloud.feature_dim = dim;
  cloud.features = r.get_array<double>(n * dim);
  if (has_labels) cloud.labels = r.get_array<std::int8_t>(n);
  if (!r.at_end()) r.fail_format("trailing bytes after point cloud");
  try {
    cloud.validate();
  } catch (const ArgumentError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return cloud;
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  out << std::setprecision(17);
  for (const auto& p : cloud.points) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path.string() + ": not a PLY file");
  std::size_t vertices = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw IoError(path.string() + ": only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> vertices;
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") ix = static_cast<int>(i);
    if (props[i] == "y") iy = static_cast<int>(i);
    if (props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError(path.string() + ": vertex element lacks x/y/z");
  PointCloud cloud;
  cloud.points.reserve(vertices);
  std::vector<double> row(props.size());
  for (std::size_t v = 0; v < vertices; ++v) {
    for (auto& x : row)
      if (!(in >> x)) throw IoError(path.string() + ": truncated vertex list at vertex " + std::to_string(v));
    cloud.points.push_back({row[ix], row[iy], row[iz]});
  }
  return cloud;
}

}  // namespace pdr::geometry
