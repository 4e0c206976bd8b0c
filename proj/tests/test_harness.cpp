// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "pdr/error.hpp"
#include "pdr/geometry/cloud_io.hpp"
#include "pdr/harness/evaluation.hpp"
#include "pdr/harness/generation.hpp"
#include "pdr/harness/manifest.hpp"
#include "pdr/harness/pipeline.hpp"
#include "pdr/harness/training.hpp"
#include "pdr/schedule/schedule.hpp"
#include "support.hpp"

using namespace pdr;
using namespace pdr::harness;
namespace fs = std::filesystem;

namespace {

RunManifest tiny_manifest(const fs::path& out) {
  RunManifest m;
  m.seed = 3;
  m.schedule.steps = 10;
  m.schedule.beta_1 = 1e-3;
  m.schedule.beta_T = 0.2;
  m.cgnet = denoiser::DenoiserConfig::preset("tiny");
  m.rfnet_gamma = 0.01;
  m.batch_size = 2;
  m.cgnet_steps = 4;
  m.rfnet_steps = 4;
  m.eval_every = 1;
  m.eval_pairs = 2;
  m.coarse_per_pair = 2;
  m.accel_variants = {5, 3};
  m.dataset.train_shapes = 1;
  m.dataset.eval_shapes = 1;
  m.dataset.views = 1;
  m.dataset.complete_points = 32;
  m.dataset.partial_points = 16;
  m.dataset_path = out / "data";
  m.output_dir = out / "run";
  return m;
}

std::vector<geometry::Vec3> oracle_target(std::size_t n) {
  std::mt19937_64 rng(42);
  return test::random_points(n, rng);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PDR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Manifest, JsonRoundTrip) {
  test::TempDir dir("manifest");
  auto m = tiny_manifest(dir.path());
  m.eval_accel_steps = 3;
  m.save(dir.path() / "m.json");
  const auto back = RunManifest::load(dir.path() / "m.json");
  EXPECT_EQ(back.to_json(), m.to_json());
}

TEST(Manifest, RelativePathsResolveAgainstManifestDirectory) {
  const auto m = RunManifest::from_json({{"dataset_path", "d"}, {"output_dir", "o"}}, "/base/dir");
  EXPECT_EQ(m.dataset_path, fs::path("/base/dir/d"));
  EXPECT_EQ(m.output_dir, fs::path("/base/dir/o"));
  EXPECT_EQ(RunManifest::from_json({{"output_dir", "/abs"}}, "/base").output_dir, fs::path("/abs"));
}

TEST(Manifest, RejectsBadValues) {
  EXPECT_THROW(RunManifest::from_json({{"batch_size", 0}}).validate(), ConfigError);
  EXPECT_THROW(RunManifest::from_json({{"seed", "x"}}), ConfigError);
  test::TempDir dir("manifest-bad");
  {
    std::ofstream(dir.path() / "m.json") << "{ not json";
  }
  EXPECT_THROW(RunManifest::load(dir.path() / "m.json"), ConfigError);
  EXPECT_THROW(RunManifest::load(dir.path() / "missing.json"), ConfigError);
}

TEST(Seeds, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stage = 0; stage < 12; ++stage)
    for (std::uint64_t item = 0; item < 50; ++item) seen.insert(derive_seed(7, stage, item));
  EXPECT_EQ(seen.size(), 600u);
  EXPECT_EQ(derive_seed(7, 3, 1), derive_seed(7, 3, 1));
  EXPECT_NE(derive_seed(7, 3, 1), derive_seed(8, 3, 1));
}

TEST(Checkpoints, BestIsLowestEvalCd) {
  std::vector<CheckpointRecord> r(4);
  const double cds[] = {0.5, 0.2, 0.3, 0.2};
  for (std::size_t i = 0; i < 4; ++i) r[i].eval_cd = cds[i];
  EXPECT_EQ(best_checkpoint(r), 1u);
  EXPECT_THROW(best_checkpoint({}), ArgumentError);
}

TEST(Parallel, VisitsEveryIndexAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw NumericError("boom");
                            }),
               NumericError);
}

TEST(Sampling, OneCallPerPlanPosition) {
  const auto s = schedule::DiffusionSchedule::linear(100, 1e-3, 0.2);
  const NoisePredictor zero = [](std::span<const geometry::Vec3> x, std::size_t) {
    return std::vector<geometry::Vec3>(x.size(), geometry::Vec3{0, 0, 0});
  };
  for (std::size_t n : {50, 20}) {
    std::atomic<std::size_t> calls{0};
    std::mt19937_64 rng(1);
    reverse_sample(zero, 8, schedule::build_accelerated(s, n), rng, &calls);
    EXPECT_EQ(calls.load(), n);
  }
  std::atomic<std::size_t> calls{0};
  std::mt19937_64 rng(1);
  reverse_sample(zero, 8, schedule::full_plan(s), rng, &calls);
  EXPECT_EQ(calls.load(), 100u);
}

TEST(Sampling, OracleRecoversTarget) {
  const auto s = schedule::DiffusionSchedule::linear(100, 1e-3, 0.2);
  const auto x0 = oracle_target(20);
  for (const auto& plan : {schedule::full_plan(s), schedule::build_accelerated(s, 20)}) {
    // Plan positions map to kept steps; the oracle needs the matching alpha bar.
    const NoisePredictor oracle = [&](std::span<const geometry::Vec3> x, std::size_t t) {
      return schedule::oracle_noise({x.begin(), x.end()}, x0, s.alpha_bar(t));
    };
    std::mt19937_64 rng(2);
    const auto out = reverse_sample(oracle, 20, plan, rng);
    for (std::size_t i = 0; i < 20; ++i)
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(out[i][a], x0[i][a], 1e-6);
  }
}

TEST(Generation, CoarseCacheIsDeterministicAndLeavesParametersAlone) {
  test::TempDir dir("cache");
  const auto m = tiny_manifest(dir.path());
  auto pairs = data::generate_dataset(m.dataset, 1);
  pairs.resize(3);
  const denoiser::Denoiser net(m.cgnet, 5);
  const auto before = net.parameters().clone();
  const auto plan = schedule::build_accelerated(schedule::DiffusionSchedule::from_config(m.schedule), 4);
  auto a = pairs, b = pairs;
  cache_coarse(net, a, 2, 32, plan, 9, 1);
  cache_coarse(net, b, 2, 32, plan, 9, 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ASSERT_EQ(a[i].coarse.size(), 2u);
    EXPECT_EQ(a[i].coarse[0].size(), 32u);
    EXPECT_EQ(a[i].coarse, b[i].coarse);
    EXPECT_NE(a[i].coarse[0].points, a[i].coarse[1].points);
  }
  for (std::size_t p = 0; p < before.size(); ++p) {
    const auto x = before.tensors()[p].values(), y = net.parameters().tensors()[p].values();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
}

TEST(Training, StagesProduceCheckpointsAndRows) {
  test::TempDir dir("train");
  const auto m = tiny_manifest(dir.path());
  StageOptions opt;
  run_gen_data(m, opt);
  const auto cg = run_train_cgnet(m, opt);
  EXPECT_EQ(cg.losses.size(), m.cgnet_steps);
  EXPECT_TRUE(fs::exists(cgnet_checkpoint(m)));
  run_cache_coarse(m, opt);
  const auto rf = run_train_rfnet(m, opt);
  EXPECT_EQ(rf.losses.size(), m.rfnet_steps);
  const auto summary = run_eval(m, opt);
  EXPECT_EQ(summary.find("5-step", "coarse").denoiser_calls, 5u);
  EXPECT_EQ(summary.find("3-step", "coarse").denoiser_calls, 3u);
  EXPECT_EQ(summary.find("full", "coarse").denoiser_calls, 10u);
  EXPECT_NO_THROW(summary.find("full", "refined"));
  EXPECT_EQ(summary.rows.size(), 6 * m.eval_pairs);
  std::ifstream in(m.output_dir / "eval.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    EXPECT_NO_THROW((void)nlohmann::json::parse(line));
    ++lines;
  }
  EXPECT_EQ(lines, summary.rows.size() + summary.aggregate.size());
}

TEST(Training, NonFiniteLossAbortsAndKeepsLastGood) {
  test::TempDir dir("nan");
  const auto m = tiny_manifest(dir.path());
  const auto pairs = data::generate_dataset(m.dataset, 1);
  denoiser::Denoiser net(m.cgnet, 5);
  net.parameters().tensors()[0].mutable_values()[0] = std::nan("");
  EXPECT_THROW(train_cgnet(m, net, data::select_split(pairs, "train"), data::select_split(pairs, "eval")),
               NumericError);
  EXPECT_TRUE(fs::exists(m.output_dir / "cgnet_last_good.pdrk"));
}

TEST(Cli, ExitCodes) {
  test::TempDir dir("cli");
  const auto m = tiny_manifest(dir.path());
  m.save(dir.path() / "m.json");
  const auto manifest = (dir.path() / "m.json").string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("train-cgnet"), 2);
  EXPECT_EQ(run_cli("train-cgnet --manifest " + (dir.path() / "missing.json").string()), 2);
  {
    std::ofstream(dir.path() / "bad.json") << R"({"batch_size": 0})";
  }
  EXPECT_EQ(run_cli("gen-data --manifest " + (dir.path() / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("train-cgnet --manifest " + manifest), 3);
  EXPECT_EQ(run_cli("gen-data --manifest " + manifest), 0);
  EXPECT_TRUE(fs::exists(m.dataset_path / "manifest.json"));
  const auto out = dir.path() / "boxes.pdrc";
  EXPECT_EQ(run_cli("box-sample --box 0,0,0,0.5,0.5,0.5 --count 40 --output " + out.string()), 0);
  EXPECT_EQ(geometry::load_cloud(out).size(), 40u);
  EXPECT_EQ(run_cli("box-sample --box 0,0,0 --count 40 --output " + out.string()), 2);
  EXPECT_EQ(run_cli("fix-scale --partial " + out.string() + " --complete " + (dir.path() / "none.pdrc").string()), 3);
}
