// SPDX-License-Identifier: Apache-2.0
#include "pdr/data/augment.hpp"

#include <cmath>
#include <numbers>

#include "pdr/error.hpp"

namespace pdr::data {

namespace {

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Mat3 identity3() { return {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}; }

// Rotation by `angle` radians about the given coordinate axis.
Mat3 rotation(Axis axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r = identity3();
  const int a = static_cast<int>(axis);
  const int u = (a + 1) % 3, v = (a + 2) % 3;
  r[u][u] = c;
  r[u][v] = -s;
  r[v][u] = s;
  r[v][v] = c;
  return r;
}

std::string axis_name(Axis a) { return a == Axis::x ? "x" : a == Axis::y ? "y" : "z"; }

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw ConfigError("augment config: unknown up_axis '" + s + "'");
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(mirror_prob >= 0 && mirror_prob <= 1)) throw ConfigError("augment config: mirror_prob must be in [0, 1]");
  if (!(translation_std >= 0)) throw ConfigError("augment config: translation_std must be >= 0");
  if (!(scale_low > 0 && scale_low <= scale_high)) throw ConfigError("augment config: need 0 < scale_low <= scale_high");
  if (!(rotation_limit_deg >= 0)) throw ConfigError("augment config: rotation_limit_deg must be >= 0");
}

nlohmann::json AugmentConfig::to_json() const {
  return {{"rotation_limit_deg", rotation_limit_deg}, {"mirror_prob", mirror_prob},
          {"translation_std", translation_std},       {"scale_low", scale_low},
          {"scale_high", scale_high},                 {"up_axis", axis_name(up_axis)}};
}

AugmentConfig AugmentConfig::from_json(const nlohmann::json& j) {
  AugmentConfig c;
  if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::string>();
    if (p == "cgnet") {
      c = cgnet_preset();
    } else if (p == "rfnet") {
      c = rfnet_preset();
    } else if (p == "identity") {
      c = identity();
    } else {
      throw ConfigError("augment config: unknown preset '" + p + "'");
    }
  }
  try {
    if (j.contains("rotation_limit_deg")) j.at("rotation_limit_deg").get_to(c.rotation_limit_deg);
    if (j.contains("mirror_prob")) j.at("mirror_prob").get_to(c.mirror_prob);
    if (j.contains("translation_std")) j.at("translation_std").get_to(c.translation_std);
    if (j.contains("scale_low")) j.at("scale_low").get_to(c.scale_low);
    if (j.contains("scale_high")) j.at("scale_high").get_to(c.scale_high);
    if (j.contains("up_axis")) c.up_axis = parse_axis(j.at("up_axis").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augment config: ") + e.what());
  }
  c.validate();
  return c;
}

AugmentConfig AugmentConfig::cgnet_preset() { return {90.0, 0.5, 0.1, 1.0 / 1.2, 1.2, Axis::y}; }
AugmentConfig AugmentConfig::rfnet_preset() { return {3.0, 0.5, 0.005, 1.0 / 1.01, 1.01, Axis::y}; }

Vec3 Transform::apply(const Vec3& p) const {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = scale * geometry::dot(linear[i], p) + translation[i];
  return out;
}

PointCloud Transform::apply(const PointCloud& cloud) const {
  PointCloud out = cloud;
  for (auto& p : out.points) p = apply(p);
  return out;
}

Transform sample_transform(const AugmentConfig& config, std::mt19937_64& rng) {
  config.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double limit = config.rotation_limit_deg * std::numbers::pi / 180.0;
  const double angle = limit > 0 ? std::uniform_real_distribution<double>(-limit, limit)(rng) : 0.0;

  Transform t;
  t.linear = rotation(config.up_axis, angle);
  // The two mirror planes contain the up axis.
  const int up = static_cast<int>(config.up_axis);
  for (int k = 1; k <= 2; ++k) {
    if (unit(rng) < config.mirror_prob / 2) {
      Mat3 m = identity3();
      m[(up + k) % 3][(up + k) % 3] = -1;
      t.linear = multiply(t.linear, m);
    }
  }
  if (config.translation_std > 0) {
    std::normal_distribution<double> gauss(0.0, config.translation_std);
    for (auto& v : t.translation) v = gauss(rng);
  }
  t.scale = config.scale_low < config.scale_high
                ? std::uniform_real_distribution<double>(config.scale_low, config.scale_high)(rng)
                : config.scale_low;
  return t;
}

}  // namespace pdr::data
