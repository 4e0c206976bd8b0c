// SPDX-License-Identifier: Apache-2.0
#include "pdr/harness/pipeline.hpp"

#include <fstream>

#include "pdr/error.hpp"
#include "pdr/geometry/cloud_io.hpp"
#include "pdr/harness/generation.hpp"

namespace pdr::harness {

namespace fs = std::filesystem;

namespace {

void say(const StageOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

// The paper's schedule uses T = 1000; shorter toy runs are marked in every record file.
bool non_paper(const RunManifest& m) { return m.schedule.steps != 1000; }

nlohmann::json records_json(const RunManifest& m, const TrainResult& r) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"epoch", rec.epoch}, {"step", rec.step}, {"file", rec.file.string()}, {"eval_cd", rec.eval_cd}});
  }
  return {{"non_paper_schedule", non_paper(m)}, {"records", records}, {"best", r.best}, {"losses", r.losses}};
}

std::vector<data::DatasetPair> load_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("dataset not found: " + path.string());
  auto pairs = data::load_pairs(path);
  if (pairs.empty()) throw IoError("dataset is empty: " + path.string());
  return pairs;
}

void copy_ply(const fs::path& dir, const std::vector<data::DatasetPair>& pairs) {
  fs::create_directories(dir / "ply");
  for (const auto& p : pairs) {
    const std::string base = p.shape_id + "_" + p.view_id;
    geometry::save_ply(dir / "ply" / (base + "_partial.ply"), p.partial);
    geometry::save_ply(dir / "ply" / (base + "_complete.ply"), p.complete);
    for (std::size_t k = 0; k < p.coarse.size(); ++k) {
      geometry::save_ply(dir / "ply" / (base + "_coarse" + std::to_string(k) + ".ply"), p.coarse[k]);
    }
  }
}

}  // namespace

fs::path cgnet_checkpoint(const RunManifest& m) { return m.output_dir / "cgnet_best.pdrk"; }
fs::path rfnet_checkpoint(const RunManifest& m) { return m.output_dir / "rfnet_best.pdrk"; }
fs::path coarse_store(const RunManifest& m) { return m.output_dir / "coarse"; }

denoiser::Denoiser make_cgnet(const RunManifest& m) { return {m.cgnet, derive_seed(m.seed, 10)}; }
denoiser::Denoiser make_rfnet(const RunManifest& m) { return {m.rfnet(), derive_seed(m.seed, 11)}; }

denoiser::Denoiser load_cgnet(const RunManifest& m, const fs::path& file) {
  if (!fs::exists(file)) throw IoError("checkpoint not found: " + file.string());
  auto net = make_cgnet(m);
  nn::load_checkpoint_into(file, net.parameters());
  return net;
}

denoiser::Denoiser load_rfnet(const RunManifest& m, const fs::path& file) {
  if (!fs::exists(file)) throw IoError("checkpoint not found: " + file.string());
  auto net = make_rfnet(m);
  nn::load_checkpoint_into(file, net.parameters());
  return net;
}

schedule::AcceleratedSchedule sampling_plan(const RunManifest& m, const std::optional<std::size_t>& accel_steps) {
  const auto sched = schedule::DiffusionSchedule::from_config(m.schedule);
  const auto steps = accel_steps ? accel_steps : m.schedule.accel_steps;
  if (!steps || *steps == sched.steps()) return schedule::full_plan(sched);
  return schedule::build_accelerated(sched, *steps, m.schedule.accel_spacing);
}

std::vector<data::DatasetPair> train_split(const std::vector<data::DatasetPair>& pairs) {
  return data::select_split(pairs, "train");
}

std::vector<data::DatasetPair> held_out_split(const RunManifest& m, const std::vector<data::DatasetPair>& pairs) {
  auto eval = data::select_split(pairs, "eval");
  if (eval.size() > m.eval_pairs) eval.resize(m.eval_pairs);
  return eval;
}

void run_gen_data(const RunManifest& m, const StageOptions& options) {
  const auto pairs = data::generate_dataset(m.dataset, derive_seed(m.seed, 0));
  data::save_pairs(m.dataset_path, pairs);
  if (options.ply) copy_ply(m.dataset_path, pairs);
  say(options, "gen-data: wrote " + std::to_string(pairs.size()) + " pairs to " + m.dataset_path.string());
}

TrainResult run_train_cgnet(const RunManifest& m, const StageOptions& options) {
  const auto pairs = load_dataset(m.dataset_path);
  auto net = make_cgnet(m);
  if (non_paper(m)) say(options, "train-cgnet: T = " + std::to_string(m.schedule.steps) + " (non-paper schedule)");
  const auto result = train_cgnet(m, net, train_split(pairs), held_out_split(m, pairs), {options.threads, options.log});
  nlohmann::json info = records_json(m, result);
  info["config"] = m.cgnet.to_json();
  write_json(m.output_dir / "cgnet.json", info);
  return result;
}

void run_cache_coarse(const RunManifest& m, const StageOptions& options) {
  const auto pairs = load_dataset(m.dataset_path);
  const auto net = load_cgnet(m, cgnet_checkpoint(m));
  const auto plan = sampling_plan(m, options.accel_steps);
  auto train = train_split(pairs);
  auto eval = held_out_split(m, pairs);
  const std::size_t n = m.dataset.complete_points;
  cache_coarse(net, train, m.coarse_per_pair, n, plan, derive_seed(m.seed, 3, 0), options.threads);
  cache_coarse(net, eval, 1, n, plan, derive_seed(m.seed, 3, 1), options.threads);
  auto all = std::move(train);
  all.insert(all.end(), eval.begin(), eval.end());
  data::save_pairs(coarse_store(m), all);
  if (options.ply) copy_ply(coarse_store(m), all);
  say(options, "cache-coarse: " + std::to_string(plan.length()) + "-step sampler, wrote " + coarse_store(m).string());
}

TrainResult run_train_rfnet(const RunManifest& m, const StageOptions& options) {
  const auto pairs = load_dataset(coarse_store(m));
  auto net = make_rfnet(m);
  const auto result = train_rfnet(m, net, train_split(pairs), held_out_split(m, pairs), {options.threads, options.log});
  nlohmann::json info = records_json(m, result);
  info["config"] = m.rfnet().to_json();
  write_json(m.output_dir / "rfnet.json", info);
  return result;
}

EvalSummary run_eval(const RunManifest& m, const StageOptions& options) {
  const auto pairs = held_out_split(m, load_dataset(m.dataset_path));
  if (pairs.empty()) throw IoError("eval: dataset has no eval split");
  const auto cgnet = load_cgnet(m, cgnet_checkpoint(m));
  std::optional<denoiser::Denoiser> rfnet;
  if (fs::exists(rfnet_checkpoint(m))) rfnet = load_rfnet(m, rfnet_checkpoint(m));
  const auto summary = evaluate(m, cgnet, rfnet ? &*rfnet : nullptr, pairs, options.threads);
  fs::create_directories(m.output_dir);
  std::ofstream out(m.output_dir / "eval.jsonl");
  summary.write_jsonl(out);
  if (!out) throw IoError("cannot write " + (m.output_dir / "eval.jsonl").string());
  return summary;
}

}  // namespace pdr::harness
