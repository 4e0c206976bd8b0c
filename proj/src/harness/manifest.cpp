// SPDX-License-Identifier: Apache-2.0
#include "pdr/harness/manifest.hpp"

#include <fstream>
#include <random>

#include "pdr/error.hpp"

namespace pdr::harness {

namespace fs = std::filesystem;

namespace {

nlohmann::json adam_to_json(const nn::AdamConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

nn::AdamConfig adam_from_json(const nlohmann::json& j) {
  nn::AdamConfig c;
  if (j.contains("lr")) j.at("lr").get_to(c.lr);
  if (j.contains("beta1")) j.at("beta1").get_to(c.beta1);
  if (j.contains("beta2")) j.at("beta2").get_to(c.beta2);
  if (j.contains("eps")) j.at("eps").get_to(c.eps);
  if (!(c.lr > 0)) throw ConfigError("optimizer: lr must be positive");
  return c;
}

}  // namespace

nlohmann::json schedule_to_json(const schedule::ScheduleConfig& c) {
  nlohmann::json j{{"T", c.steps}, {"beta_1", c.beta_1}, {"beta_T", c.beta_T},
                   {"accel_spacing", schedule::to_string(c.accel_spacing)}};
  if (c.accel_steps) j["accel_steps"] = *c.accel_steps;
  return j;
}

schedule::ScheduleConfig schedule_from_json(const nlohmann::json& j) {
  schedule::ScheduleConfig c;
  if (j.contains("T")) j.at("T").get_to(c.steps);
  if (j.contains("beta_1")) j.at("beta_1").get_to(c.beta_1);
  if (j.contains("beta_T")) j.at("beta_T").get_to(c.beta_T);
  if (j.contains("accel_steps") && !j.at("accel_steps").is_null()) c.accel_steps = j.at("accel_steps").get<std::size_t>();
  if (j.contains("accel_spacing")) c.accel_spacing = schedule::parse_spacing(j.at("accel_spacing").get<std::string>());
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t item) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(item),
                    static_cast<std::uint32_t>(item >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

void RunManifest::validate() const {
  cgnet.validate();
  if (!cgnet.use_step_embedding) throw ConfigError("manifest: cgnet block must use the step embedding");
  rfnet();
  cgnet_augment.validate();
  rfnet_augment.validate();
  dataset.validate();
  if (batch_size == 0) throw ConfigError("manifest: batch_size must be >= 1");
  if (coarse_per_pair == 0) throw ConfigError("manifest: coarse_per_pair must be >= 1");
  if (schedule.steps < 2) throw ConfigError("manifest: schedule needs T >= 2");
  for (auto n : accel_variants) {
    if (n < 2 || n > schedule.steps) throw ConfigError("manifest: accelerated variant out of range");
  }
  if (eval_accel_steps && (*eval_accel_steps < 2 || *eval_accel_steps > schedule.steps)) {
    throw ConfigError("manifest: eval_accel_steps out of range");
  }
  if (!(f1_rho > 0)) throw ConfigError("manifest: f1_rho must be positive");
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j{{"version", 1},
                   {"seed", seed},
                   {"schedule", schedule_to_json(schedule)},
                   {"cgnet", cgnet.to_json()},
                   {"rfnet", {{"lambda", rfnet_lambda}, {"gamma", rfnet_gamma}}},
                   {"augment", {{"cgnet", cgnet_augment.to_json()}, {"rfnet", rfnet_augment.to_json()}}},
                   {"optimizer", {{"cgnet", adam_to_json(cgnet_optimizer)}, {"rfnet", adam_to_json(rfnet_optimizer)}}},
                   {"batch_size", batch_size},
                   {"cgnet_steps", cgnet_steps},
                   {"rfnet_steps", rfnet_steps},
                   {"eval_every", eval_every},
                   {"eval_pairs", eval_pairs},
                   {"coarse_per_pair", coarse_per_pair},
                   {"accel_variants", accel_variants},
                   {"f1_rho", f1_rho},
                   {"dataset", dataset.to_json()},
                   {"dataset_path", dataset_path.string()},
                   {"output_dir", output_dir.string()}};
  if (eval_accel_steps) j["eval_accel_steps"] = *eval_accel_steps;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  RunManifest m;
  try {
    if (j.value("version", 1) != 1) throw ConfigError("manifest: unsupported version");
    if (j.contains("seed")) j.at("seed").get_to(m.seed);
    if (j.contains("schedule")) m.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("cgnet")) m.cgnet = denoiser::DenoiserConfig::from_json(j.at("cgnet"));
    if (j.contains("rfnet")) {
      const auto& r = j.at("rfnet");
      if (r.contains("lambda")) r.at("lambda").get_to(m.rfnet_lambda);
      if (r.contains("gamma")) r.at("gamma").get_to(m.rfnet_gamma);
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      if (a.contains("cgnet")) m.cgnet_augment = data::AugmentConfig::from_json(a.at("cgnet"));
      if (a.contains("rfnet")) m.rfnet_augment = data::AugmentConfig::from_json(a.at("rfnet"));
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      if (o.contains("cgnet")) m.cgnet_optimizer = adam_from_json(o.at("cgnet"));
      if (o.contains("rfnet")) m.rfnet_optimizer = adam_from_json(o.at("rfnet"));
    }
    if (j.contains("batch_size")) j.at("batch_size").get_to(m.batch_size);
    if (j.contains("cgnet_steps")) j.at("cgnet_steps").get_to(m.cgnet_steps);
    if (j.contains("rfnet_steps")) j.at("rfnet_steps").get_to(m.rfnet_steps);
    if (j.contains("eval_every")) j.at("eval_every").get_to(m.eval_every);
    if (j.contains("eval_pairs")) j.at("eval_pairs").get_to(m.eval_pairs);
    if (j.contains("eval_accel_steps") && !j.at("eval_accel_steps").is_null()) {
      m.eval_accel_steps = j.at("eval_accel_steps").get<std::size_t>();
    }
    if (j.contains("coarse_per_pair")) j.at("coarse_per_pair").get_to(m.coarse_per_pair);
    if (j.contains("accel_variants")) j.at("accel_variants").get_to(m.accel_variants);
    if (j.contains("f1_rho")) j.at("f1_rho").get_to(m.f1_rho);
    if (j.contains("dataset")) m.dataset = data::DatasetConfig::from_json(j.at("dataset"));
    const auto resolve = [&](const std::string& p) {
      const fs::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (j.contains("dataset_path")) m.dataset_path = resolve(j.at("dataset_path").get<std::string>());
    if (j.contains("output_dir")) m.output_dir = resolve(j.at("output_dir").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest: " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunManifest::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("cannot write manifest " + path.string());
}

}  // namespace pdr::harness
