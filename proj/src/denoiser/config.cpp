// SPDX-License-Identifier: Apache-2.0
#include "pdr/denoiser/config.hpp"

#include <cmath>

#include "pdr/error.hpp"

namespace pdr::denoiser {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("denoiser config: " + message);
}

void require_ladder(const std::vector<std::size_t>& ladder, std::size_t levels, const char* name) {
  require(ladder.size() == levels + 1, std::string(name) + " needs " + std::to_string(levels + 1) + " counts");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    require(ladder[i] > 0, std::string(name) + " counts must be positive");
    if (i) require(ladder[i] < ladder[i - 1], std::string(name) + " must be strictly decreasing");
  }
}

void require_dims(const std::vector<std::size_t>& dims, std::size_t count, const char* name) {
  require(dims.size() == count, std::string(name) + " needs " + std::to_string(count) + " entries");
  for (auto d : dims) require(d > 0, std::string(name) + " entries must be positive");
}

}  // namespace

void DenoiserConfig::validate() const {
  const std::size_t L = levels();
  require(L >= 1, "at least one level is required");
  require_ladder(denoise_points, L, "denoise_points");
  require_ladder(condition_points, L, "condition_points");
  require_dims(condition_dims, L, "condition_dims");
  require_dims(decoder_dims, L, "decoder_dims");
  require_dims(transfer_dims, 2 * L + 1, "transfer_dims");
  require(sa_radii.size() == L, "sa_radii needs one radius per level");
  require(ft_radii.size() == 2 * L + 1, "ft_radii needs 2L + 1 radii");
  for (double r : sa_radii) require(r > 0, "radii must be positive");
  for (double r : ft_radii) require(r > 0, "radii must be positive");
  require(k_sa > 0 && k_ft > 0 && k_fp > 0, "neighbor counts must be positive");
  require(pos_encode_dim > 0 && step_embed_dim > 0, "step embedding dims must be positive");
  require(!global_stage1.empty(), "global_stage1 needs at least one width");
  for (auto d : global_stage1) require(d > 0, "global_stage1 widths must be positive");
  require(global_stage2_hidden > 0 && global_feature_dim > 0, "global feature dims must be positive");
  require(query_dim > 0 && key_dim > 0 && head_hidden > 0, "attention and head dims must be positive");
  if (!use_step_embedding) {
    require(upsample_factor >= 1, "refinement upsample factor lambda must be >= 1");
    require(displacement_scale > 0, "refinement displacement scale gamma must be positive");
  }
}

nlohmann::json DenoiserConfig::to_json() const {
  return {{"denoise_points", denoise_points},
          {"condition_points", condition_points},
          {"feature_dims", feature_dims},
          {"condition_dims", condition_dims},
          {"decoder_dims", decoder_dims},
          {"transfer_dims", transfer_dims},
          {"sa_radii", sa_radii},
          {"ft_radii", ft_radii},
          {"k_sa", k_sa},
          {"k_ft", k_ft},
          {"k_fp", k_fp},
          {"pos_encode_dim", pos_encode_dim},
          {"step_encoding", step_encoding == StepEncoding::increasing ? "increasing" : "decreasing"},
          {"step_embed_dim", step_embed_dim},
          {"global_stage1", global_stage1},
          {"global_stage2_hidden", global_stage2_hidden},
          {"global_feature_dim", global_feature_dim},
          {"query_dim", query_dim},
          {"key_dim", key_dim},
          {"head_hidden", head_hidden},
          {"condition_input_dim", condition_input_dim},
          {"use_step_embedding", use_step_embedding},
          {"upsample_factor", upsample_factor},
          {"displacement_scale", displacement_scale},
          {"neighbor_seed", neighbor_seed}};
}

DenoiserConfig DenoiserConfig::from_json(const nlohmann::json& j) {
  DenoiserConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : DenoiserConfig{};
  try {
    const auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    read("denoise_points", c.denoise_points);
    read("condition_points", c.condition_points);
    read("feature_dims", c.feature_dims);
    read("condition_dims", c.condition_dims);
    read("decoder_dims", c.decoder_dims);
    read("transfer_dims", c.transfer_dims);
    read("sa_radii", c.sa_radii);
    read("ft_radii", c.ft_radii);
    read("k_sa", c.k_sa);
    read("k_ft", c.k_ft);
    read("k_fp", c.k_fp);
    read("pos_encode_dim", c.pos_encode_dim);
    if (j.contains("step_encoding")) {
      const auto s = j.at("step_encoding").get<std::string>();
      if (s == "increasing") {
        c.step_encoding = StepEncoding::increasing;
      } else if (s == "decreasing") {
        c.step_encoding = StepEncoding::decreasing;
      } else {
        throw ConfigError("denoiser config: unknown step_encoding '" + s + "'");
      }
    }
    read("step_embed_dim", c.step_embed_dim);
    read("global_stage1", c.global_stage1);
    read("global_stage2_hidden", c.global_stage2_hidden);
    read("global_feature_dim", c.global_feature_dim);
    read("query_dim", c.query_dim);
    read("key_dim", c.key_dim);
    read("head_hidden", c.head_hidden);
    read("condition_input_dim", c.condition_input_dim);
    read("use_step_embedding", c.use_step_embedding);
    read("upsample_factor", c.upsample_factor);
    read("displacement_scale", c.displacement_scale);
    read("neighbor_seed", c.neighbor_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("denoiser config: ") + e.what());
  }
  c.validate();
  return c;
}

DenoiserConfig DenoiserConfig::preset(const std::string& name) {
  DenoiserConfig c;
  if (name == "desk") return c;
  if (name == "paper-scale") {
    c.denoise_points = {2048, 1024, 256, 64, 16};
    c.condition_points = {3072, 1536, 384, 96, 24};
    c.feature_dims = {64, 128, 256, 512};
    c.condition_dims = {64, 128, 256, 512};
    c.decoder_dims = {128, 128, 256, 256};
    c.transfer_dims = {32, 64, 128, 256, 512, 256, 128, 64, 32};
    c.head_hidden = 128;
    return c;
  }
  if (name == "tiny") {
    c.denoise_points = {32, 16, 8, 4, 2};
    c.condition_points = {24, 12, 6, 3, 2};
    c.feature_dims = {8, 8, 8, 8};
    c.condition_dims = {8, 8, 8, 8};
    c.decoder_dims = {8, 8, 8, 8};
    c.transfer_dims = {4, 4, 4, 4, 4, 4, 4, 4, 4};
    c.pos_encode_dim = 4;
    c.step_embed_dim = 8;
    c.global_stage1 = {8};
    c.global_stage2_hidden = 8;
    c.global_feature_dim = 8;
    c.query_dim = 4;
    c.key_dim = 4;
    c.head_hidden = 8;
    return c;
  }
  if (name == "toy") {
    c.feature_dims = {16, 32, 48, 64};
    c.condition_dims = {16, 32, 48, 64};
    c.decoder_dims = {16, 16, 32, 48};
    c.transfer_dims = {8, 16, 24, 32, 32, 32, 24, 16, 8};
    c.pos_encode_dim = 32;
    c.step_embed_dim = 64;
    c.global_stage1 = {32, 64};
    c.global_stage2_hidden = 64;
    c.global_feature_dim = 128;
    c.query_dim = 16;
    c.key_dim = 16;
    c.head_hidden = 32;
    return c;
  }
  throw ConfigError("unknown denoiser preset '" + name + "'");
}

DenoiserConfig DenoiserConfig::as_refiner(std::size_t lambda, double gamma) const {
  DenoiserConfig c = *this;
  c.use_step_embedding = false;
  c.upsample_factor = lambda;
  c.displacement_scale = gamma;
  c.validate();
  return c;
}

std::size_t level_point_count(const std::vector<std::size_t>& ladder, std::size_t level, std::size_t n) {
  if (level >= ladder.size()) throw ConfigError("level index out of range");
  if (n == ladder.front()) return ladder[level];
  const double ratio = static_cast<double>(ladder[level]) / static_cast<double>(ladder.front());
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(count, 1, n);
}

}  // namespace pdr::denoiser
