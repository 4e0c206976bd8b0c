// SPDX-License-Identifier: Apache-2.0
#include "pdr/harness/evaluation.hpp"

#include <atomic>

#include "pdr/error.hpp"
#include "pdr/harness/generation.hpp"

namespace pdr::harness {

nlohmann::json EvalRow::to_json() const {
  nlohmann::json j{{"sampler", sampler}, {"stage", stage}, {"shape_id", shape_id}, {"view_id", view_id},
                   {"denoiser_calls", denoiser_calls}};
  j.update(report.to_json());
  return j;
}

const EvalRow& EvalSummary::find(const std::string& sampler, const std::string& stage) const {
  for (const auto& r : aggregate)
    if (r.sampler == sampler && r.stage == stage) return r;
  throw ArgumentError("evaluation summary has no row for " + sampler + "/" + stage);
}

void EvalSummary::write_jsonl(std::ostream& out) const {
  for (const auto& r : rows) out << r.to_json().dump() << "\n";
  for (const auto& r : aggregate) {
    auto j = r.to_json();
    j["aggregate"] = true;
    out << j.dump() << "\n";
  }
}

double mean_coarse_cd(const denoiser::Denoiser& cgnet, const std::vector<data::DatasetPair>& pairs,
                      std::size_t n_points, const schedule::AcceleratedSchedule& plan, std::uint64_t seed,
                      std::size_t threads) {
  if (pairs.empty()) throw ArgumentError("mean_coarse_cd: no pairs");
  std::vector<double> cds(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, 0, i));
    const auto u = generate_coarse(cgnet, pairs[i].partial, n_points, plan, rng);
    cds[i] = metrics::chamfer(u, pairs[i].complete.points);
  });
  double total = 0;
  for (double c : cds) total += c;
  return total / static_cast<double>(cds.size());
}

EvalSummary evaluate(const RunManifest& manifest, const denoiser::Denoiser& cgnet, const denoiser::Denoiser* rfnet,
                     const std::vector<data::DatasetPair>& pairs, std::size_t threads) {
  if (pairs.empty()) throw IoError("evaluate: no pairs");
  const auto sched = schedule::DiffusionSchedule::from_config(manifest.schedule);
  std::vector<std::pair<std::string, schedule::AcceleratedSchedule>> samplers{{"full", schedule::full_plan(sched)}};
  for (auto n : manifest.accel_variants) {
    samplers.emplace_back(std::to_string(n) + "-step",
                          schedule::build_accelerated(sched, n, manifest.schedule.accel_spacing));
  }
  const std::size_t stages = rfnet ? 2 : 1;

  // rows[(s * pairs + i) * stages + stage]
  std::vector<EvalRow> rows(samplers.size() * pairs.size() * stages);
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto& pair = pairs[i];
    for (std::size_t s = 0; s < samplers.size(); ++s) {
      std::mt19937_64 rng(derive_seed(manifest.seed, 5, i));
      std::atomic<std::size_t> calls{0};
      const auto u = generate_coarse(cgnet, pair.partial, pair.complete.size(), samplers[s].second, rng, &calls);
      const std::size_t base = (s * pairs.size() + i) * stages;
      auto& coarse = rows[base];
      coarse = {samplers[s].first, "coarse", pair.shape_id, pair.view_id,
                metrics::evaluate_pair(u, pair.complete.points, manifest.f1_rho), calls.load()};
      if (rfnet) {
        const auto v = refine(*rfnet, u, pair.partial);
        rows[base + 1] = {samplers[s].first, "refined", pair.shape_id, pair.view_id,
                          metrics::evaluate_pair(v, pair.complete.points, manifest.f1_rho), calls.load()};
      }
    }
  });

  EvalSummary summary;
  summary.rows = rows;
  for (std::size_t s = 0; s < samplers.size(); ++s) {
    for (std::size_t stage = 0; stage < stages; ++stage) {
      std::vector<metrics::MetricReport> reports;
      std::size_t calls = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& r = rows[(s * pairs.size() + i) * stages + stage];
        reports.push_back(r.report);
        calls = std::max(calls, r.denoiser_calls);
      }
      summary.aggregate.push_back(
          {samplers[s].first, stage == 0 ? "coarse" : "refined", "*", "*", metrics::aggregate(reports), calls});
    }
  }
  return summary;
}

}  // namespace pdr::harness
