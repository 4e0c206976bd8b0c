// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdr/data/augment.hpp"
#include "pdr/data/dataset.hpp"
#include "pdr/denoiser/config.hpp"
#include "pdr/nn/optim.hpp"
#include "pdr/schedule/schedule.hpp"

namespace pdr::harness {

// Everything a pipeline stage needs besides the dataset itself.
struct RunManifest {
  std::uint64_t seed = 1;
  schedule::ScheduleConfig schedule;
  denoiser::DenoiserConfig cgnet;
  std::size_t rfnet_lambda = 1;
  double rfnet_gamma = 0.001;
  data::AugmentConfig cgnet_augment = data::AugmentConfig::cgnet_preset();
  data::AugmentConfig rfnet_augment = data::AugmentConfig::rfnet_preset();
  nn::AdamConfig cgnet_optimizer;
  nn::AdamConfig rfnet_optimizer;
  std::size_t batch_size = 8;
  std::size_t cgnet_steps = 2000;
  std::size_t rfnet_steps = 1000;
  std::size_t eval_every = 20;  // epochs; 0 evaluates only after the last step
  std::size_t eval_pairs = 64;  // fixed held-out subset, first pairs of the eval split
  std::optional<std::size_t> eval_accel_steps;  // sampler used for checkpoint selection
  std::size_t coarse_per_pair = 10;
  std::vector<std::size_t> accel_variants{50, 20};
  double f1_rho = 1e-4;
  data::DatasetConfig dataset;
  std::filesystem::path dataset_path = "data";
  std::filesystem::path output_dir = "run";

  denoiser::DenoiserConfig rfnet() const { return cgnet.as_refiner(rfnet_lambda, rfnet_gamma); }
  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; relative paths resolve against base_dir.
  static RunManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

nlohmann::json schedule_to_json(const schedule::ScheduleConfig& config);
schedule::ScheduleConfig schedule_from_json(const nlohmann::json& j);

// Independent stream for one pipeline stage and item.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t item = 0);

}  // namespace pdr::harness
