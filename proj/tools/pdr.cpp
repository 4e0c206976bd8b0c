// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the completion pipeline.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "pdr/data/shapes.hpp"
#include "pdr/error.hpp"
#include "pdr/geometry/cloud_io.hpp"
#include "pdr/harness/generation.hpp"
#include "pdr/harness/pipeline.hpp"
#include "pdr/metrics/metrics.hpp"

namespace fs = std::filesystem;
using namespace pdr;

namespace {

struct Common {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::optional<std::size_t> accel_steps;
  std::string out;
  bool ply = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_manifest) {
  auto* opt = cmd->add_option("--manifest", c.manifest, "run manifest (JSON)");
  if (needs_manifest) opt->required();
  cmd->add_option("--seed", c.seed, "override the manifest seed");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--accel-steps", c.accel_steps, "reverse-process steps for sampling");
  cmd->add_option("--out", c.out, "override the manifest output directory");
  cmd->add_flag("--ply", c.ply, "also write PLY files");
}

harness::RunManifest load_manifest(const Common& c) {
  auto m = c.manifest.empty() ? harness::RunManifest{} : harness::RunManifest::load(c.manifest);
  if (c.seed) m.seed = *c.seed;
  if (!c.out.empty()) m.output_dir = c.out;
  return m;
}

harness::StageOptions stage_options(const Common& c) {
  harness::StageOptions o;
  o.threads = c.threads;
  o.ply = c.ply;
  o.accel_steps = c.accel_steps;
  o.log = [](const std::string& line) { std::cerr << line << "\n"; };
  return o;
}

geometry::PointCloud read_cloud(const fs::path& path) {
  return path.extension() == ".ply" ? geometry::load_ply(path) : geometry::load_cloud(path);
}

void write_cloud(const fs::path& path, const geometry::PointCloud& cloud, bool ply) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (path.extension() == ".ply") {
    geometry::save_ply(path, cloud);
    return;
  }
  geometry::save_cloud(path, cloud);
  if (ply) {
    auto copy = path;
    geometry::save_ply(copy.replace_extension(".ply"), cloud);
  }
}

// Conditioners without mirror labels get the same preprocessing as the training data.
geometry::PointCloud prepare_condition(const harness::RunManifest& m, geometry::PointCloud c) {
  if (m.dataset.mirror && !c.has_labels()) c = data::mirror_concat(c, 2);
  return c;
}

data::Box parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
  if (v.size() != 6) throw ConfigError("--box expects cx,cy,cz,hx,hy,hz; got '" + text + "'");
  data::Box b;
  b.center = {v[0], v[1], v[2]};
  b.half_extents = {v[3], v[4], v[5]};
  return b;
}

void print_summary(const harness::EvalSummary& s) {
  for (const auto& r : s.aggregate) {
    std::printf("%-8s %-8s CD %.6g EMD %.6g F1 %.4f calls %zu\n", r.sampler.c_str(), r.stage.c_str(), r.report.cd,
                r.report.emd, r.report.f1, r.denoiser_calls);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdr: diffusion-refinement point cloud completion"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  auto* train_cg = app.add_subcommand("train-cgnet", "train the conditional generation network");
  auto* cache = app.add_subcommand("cache-coarse", "sample and store coarse completions");
  auto* train_rf = app.add_subcommand("train-rfnet", "train the refinement network on cached coarse clouds");
  auto* eval = app.add_subcommand("eval", "evaluate full and accelerated samplers on held-out pairs");
  for (auto* cmd : {gen, train_cg, cache, train_rf, eval}) add_common(cmd, c, true);

  std::string partial, coarse, complete, output;
  std::size_t points = 0;
  auto* sample = app.add_subcommand("sample", "coarse completion of one partial cloud");
  add_common(sample, c, true);
  sample->add_option("--partial", partial, "partial cloud (.pdrc or .ply)")->required();
  sample->add_option("--output", output, "output cloud path")->required();
  sample->add_option("--points", points, "output point count (default: manifest complete_points)");

  auto* refine = app.add_subcommand("refine", "refine a coarse completion");
  add_common(refine, c, true);
  refine->add_option("--coarse", coarse, "coarse cloud")->required();
  refine->add_option("--partial", partial, "partial cloud")->required();
  refine->add_option("--output", output, "output cloud path")->required();

  auto* fix = app.add_subcommand("fix-scale", "fit the scale of a partial cloud to a complete one");
  add_common(fix, c, false);
  fix->add_option("--partial", partial, "partial cloud")->required();
  fix->add_option("--complete", complete, "complete cloud")->required();
  fix->add_option("--output", output, "rescaled partial cloud path");

  std::vector<std::string> boxes;
  std::size_t count = 0;
  auto* box = app.add_subcommand("box-sample", "sample a conditioner on box surfaces");
  add_common(box, c, false);
  box->add_option("--box", boxes, "box as cx,cy,cz,hx,hy,hz (repeatable)")->required();
  box->add_option("--count", count, "point count")->required();
  box->add_option("--output", output, "output cloud path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      harness::run_gen_data(load_manifest(c), stage_options(c));
    } else if (train_cg->parsed()) {
      const auto r = harness::run_train_cgnet(load_manifest(c), stage_options(c));
      std::printf("best epoch %zu eval_cd %.6g\n", r.records[r.best].epoch, r.records[r.best].eval_cd);
    } else if (cache->parsed()) {
      harness::run_cache_coarse(load_manifest(c), stage_options(c));
    } else if (train_rf->parsed()) {
      const auto r = harness::run_train_rfnet(load_manifest(c), stage_options(c));
      std::printf("best epoch %zu eval_cd %.6g\n", r.records[r.best].epoch, r.records[r.best].eval_cd);
    } else if (eval->parsed()) {
      print_summary(harness::run_eval(load_manifest(c), stage_options(c)));
    } else if (sample->parsed()) {
      const auto m = load_manifest(c);
      const auto net = harness::load_cgnet(m, harness::cgnet_checkpoint(m));
      const auto condition = prepare_condition(m, read_cloud(partial));
      std::mt19937_64 rng(harness::derive_seed(m.seed, 6));
      std::atomic<std::size_t> calls{0};
      const auto u = harness::generate_coarse(net, condition, points ? points : m.dataset.complete_points,
                                              harness::sampling_plan(m, c.accel_steps), rng, &calls);
      write_cloud(output, geometry::PointCloud(u), c.ply);
      std::printf("denoiser calls %zu\n", calls.load());
    } else if (refine->parsed()) {
      const auto m = load_manifest(c);
      const auto net = harness::load_rfnet(m, harness::rfnet_checkpoint(m));
      const auto u = read_cloud(coarse);
      const auto v = harness::refine(net, u.points, prepare_condition(m, read_cloud(partial)));
      write_cloud(output, geometry::PointCloud(v), c.ply);
    } else if (fix->parsed()) {
      const auto p = read_cloud(partial);
      const auto fit = metrics::fit_scale(p.points, read_cloud(complete).points);
      std::printf("%s\n", nlohmann::json{{"scale", fit.scale}, {"objective", fit.objective},
                                         {"inconsistent", fit.inconsistent}}.dump().c_str());
      if (!output.empty()) {
        auto scaled = p;
        for (auto& q : scaled.points) q = geometry::operator*(fit.scale, q);
        write_cloud(output, scaled, c.ply);
      }
    } else if (box->parsed()) {
      std::vector<data::Box> parsed;
      for (const auto& b : boxes) parsed.push_back(parse_box(b));
      std::mt19937_64 rng(c.seed.value_or(1));
      write_cloud(output, data::sample_box_conditioner(parsed, count, rng), c.ply);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
