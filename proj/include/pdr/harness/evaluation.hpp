// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdr/data/dataset.hpp"
#include "pdr/denoiser/network.hpp"
#include "pdr/harness/manifest.hpp"
#include "pdr/metrics/metrics.hpp"

namespace pdr::harness {

struct EvalRow {
  std::string sampler;  // "full" or "<n>-step"
  std::string stage;    // "coarse" or "refined"
  std::string shape_id;
  std::string view_id;
  metrics::MetricReport report;
  std::size_t denoiser_calls = 0;

  nlohmann::json to_json() const;
};

struct EvalSummary {
  std::vector<EvalRow> rows;       // per pair
  std::vector<EvalRow> aggregate;  // one per (sampler, stage), shape_id "*"

  const EvalRow& find(const std::string& sampler, const std::string& stage) const;
  void write_jsonl(std::ostream& out) const;
};

// Samples each pair with the full plan and each accelerated variant, then
// refines when an RFNet is given. Pair i draws from a stream derived from
// (seed, i), shared by all samplers.
EvalSummary evaluate(const RunManifest& manifest, const denoiser::Denoiser& cgnet,
                     const denoiser::Denoiser* rfnet, const std::vector<data::DatasetPair>& pairs,
                     std::size_t threads);

// Mean CD of coarse completions over pairs for one plan.
double mean_coarse_cd(const denoiser::Denoiser& cgnet, const std::vector<data::DatasetPair>& pairs,
                      std::size_t n_points, const schedule::AcceleratedSchedule& plan, std::uint64_t seed,
                      std::size_t threads);

}  // namespace pdr::harness
