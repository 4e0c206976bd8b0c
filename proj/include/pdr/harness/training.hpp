// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pdr/data/dataset.hpp"
#include "pdr/denoiser/network.hpp"
#include "pdr/harness/manifest.hpp"

namespace pdr::harness {

struct CheckpointRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::filesystem::path file;
  double eval_cd = 0;
};

// Index of the record with the lowest eval CD (first on ties).
std::size_t best_checkpoint(const std::vector<CheckpointRecord>& records);

struct TrainResult {
  std::vector<CheckpointRecord> records;
  std::size_t best = 0;
  std::vector<double> losses;  // mean batch loss per optimizer step
};

struct TrainOptions {
  std::size_t threads = 1;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

// DDPM noise-prediction training. Checkpoints land in <output_dir>/cgnet;
// the best one is copied to cgnet_best.pdrk and loaded back into `net`.
// A non-finite loss or gradient writes cgnet_last_good.pdrk and throws NumericError.
TrainResult train_cgnet(const RunManifest& manifest, denoiser::Denoiser& net,
                        const std::vector<data::DatasetPair>& train, const std::vector<data::DatasetPair>& eval,
                        const TrainOptions& options = {});

// Refinement training on cached coarse clouds with the Chamfer loss.
// Eval pairs are refined from their first cached coarse cloud.
TrainResult train_rfnet(const RunManifest& manifest, denoiser::Denoiser& net,
                        const std::vector<data::DatasetPair>& train, const std::vector<data::DatasetPair>& eval,
                        const TrainOptions& options = {});

}  // namespace pdr::harness
