// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "pdr/denoiser/network.hpp"
#include "pdr/harness/evaluation.hpp"
#include "pdr/harness/manifest.hpp"
#include "pdr/harness/training.hpp"

namespace pdr::harness {

// File stages of a run. Inputs and outputs live under manifest.dataset_path
// and manifest.output_dir:
//   <dataset_path>/manifest.json        gen-data
//   <out>/cgnet_best.pdrk, cgnet.json    train-cgnet (+ cgnet/ epoch checkpoints)
//   <out>/coarse/manifest.json           cache-coarse
//   <out>/rfnet_best.pdrk, rfnet.json    train-rfnet (+ rfnet/ epoch checkpoints)
//   <out>/eval.jsonl                     eval
struct StageOptions {
  std::size_t threads = 1;
  bool ply = false;                         // write PLY copies next to PDRC clouds
  std::optional<std::size_t> accel_steps;   // overrides the manifest sampler
  std::function<void(const std::string&)> log;
};

std::filesystem::path cgnet_checkpoint(const RunManifest& m);
std::filesystem::path rfnet_checkpoint(const RunManifest& m);
std::filesystem::path coarse_store(const RunManifest& m);

// Initial parameters come from streams derived from the run seed.
denoiser::Denoiser make_cgnet(const RunManifest& m);
denoiser::Denoiser make_rfnet(const RunManifest& m);
// Fresh network with parameters from `file`; ConfigError when the layout differs.
denoiser::Denoiser load_cgnet(const RunManifest& m, const std::filesystem::path& file);
denoiser::Denoiser load_rfnet(const RunManifest& m, const std::filesystem::path& file);

// Reverse-process plan: full, or accelerated when options or manifest ask for it.
schedule::AcceleratedSchedule sampling_plan(const RunManifest& m, const std::optional<std::size_t>& accel_steps);

// Train pairs and the fixed held-out subset (first eval_pairs of the eval split).
std::vector<data::DatasetPair> train_split(const std::vector<data::DatasetPair>& pairs);
std::vector<data::DatasetPair> held_out_split(const RunManifest& m, const std::vector<data::DatasetPair>& pairs);

void run_gen_data(const RunManifest& m, const StageOptions& options);
TrainResult run_train_cgnet(const RunManifest& m, const StageOptions& options);
// Train pairs get coarse_per_pair clouds, held-out pairs one. CGNet parameters are read only.
void run_cache_coarse(const RunManifest& m, const StageOptions& options);
TrainResult run_train_rfnet(const RunManifest& m, const StageOptions& options);
EvalSummary run_eval(const RunManifest& m, const StageOptions& options);

}  // namespace pdr::harness
