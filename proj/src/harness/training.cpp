// SPDX-License-Identifier: Apache-2.0
#include "pdr/harness/training.hpp"

#include <cmath>
#include <sstream>

#include "pdr/error.hpp"
#include "pdr/harness/evaluation.hpp"
#include "pdr/harness/generation.hpp"
#include "pdr/metrics/metrics.hpp"
#include "pdr/nn/ops.hpp"

namespace pdr::harness {

namespace fs = std::filesystem;

std::size_t best_checkpoint(const std::vector<CheckpointRecord>& records) {
  if (records.empty()) throw ArgumentError("best_checkpoint: no records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].eval_cd < records[best].eval_cd) best = i;
  return best;
}

namespace {

// One training example after augmentation, plus its diffusion draws.
struct Example {
  geometry::PointCloud partial;
  geometry::PointCloud complete;
  geometry::PointCloud coarse;
  std::size_t t = 0;
  std::vector<Vec3> noise;
};

using LossFn = std::function<nn::Tensor(const Example&)>;
using DrawFn = std::function<Example(std::mt19937_64&)>;
using EvalFn = std::function<double()>;

struct Loop {
  std::string name;
  std::size_t steps = 0;
  std::size_t batch = 1;
  std::size_t steps_per_epoch = 1;
  std::size_t eval_every = 0;
  nn::AdamConfig optimizer;
  std::uint64_t seed = 0;
};

nn::Tensor points_tensor(std::span<const Vec3> pts) {
  std::vector<double> v;
  v.reserve(pts.size() * 3);
  for (const auto& p : pts) v.insert(v.end(), p.begin(), p.end());
  return nn::Tensor::constant({pts.size(), 3}, std::move(v));
}

void say(const TrainOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

TrainResult run_loop(const Loop& loop, denoiser::Denoiser& net, const fs::path& dir, const DrawFn& draw,
                     const LossFn& loss_fn, const EvalFn& eval_fn, const TrainOptions& options) {
  fs::create_directories(dir);
  auto& params = net.parameters();
  const auto& tensors = params.tensors();
  nn::Adam adam(params, loop.optimizer);
  std::mt19937_64 rng(loop.seed);
  TrainResult result;

  const auto evaluate_and_record = [&](std::size_t step) {
    const std::size_t epoch = (step + loop.steps_per_epoch - 1) / loop.steps_per_epoch;
    CheckpointRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.file = dir / (loop.name + "_epoch" + std::to_string(epoch) + ".pdrk");
    rec.eval_cd = eval_fn();
    nn::save_checkpoint(rec.file, params);
    std::ostringstream msg;
    msg << loop.name << " epoch " << epoch << " step " << step << " eval_cd " << rec.eval_cd;
    say(options, msg.str());
    result.records.push_back(rec);
  };

  std::vector<std::vector<std::vector<double>>> grads(loop.batch);
  std::vector<double> losses(loop.batch);
  std::size_t last_eval = 0;
  for (std::size_t step = 1; step <= loop.steps; ++step) {
    std::vector<Example> batch;
    for (std::size_t b = 0; b < loop.batch; ++b) batch.push_back(draw(rng));

    parallel_for(loop.batch, options.threads, [&](std::size_t b) {
      nn::Tape tape;
      nn::TapeScope scope(tape);
      const auto loss = loss_fn(batch[b]);
      tape.backward(loss);
      losses[b] = loss.item();
      grads[b].resize(tensors.size());
      for (std::size_t p = 0; p < tensors.size(); ++p) grads[b][p] = tape.grad(tensors[p]);
    });

    // Fixed reduction order keeps the update independent of the thread count.
    double mean_loss = 0;
    std::vector<std::vector<double>> total = grads[0];
    mean_loss += losses[0];
    for (std::size_t b = 1; b < loop.batch; ++b) {
      mean_loss += losses[b];
      for (std::size_t p = 0; p < tensors.size(); ++p)
        for (std::size_t i = 0; i < total[p].size(); ++i) total[p][i] += grads[b][p][i];
    }
    const double inv = 1.0 / static_cast<double>(loop.batch);
    mean_loss *= inv;
    bool finite = std::isfinite(mean_loss);
    for (auto& g : total)
      for (auto& v : g) {
        v *= inv;
        finite = finite && std::isfinite(v);
      }
    if (!finite) {
      const auto keep = dir.parent_path() / (loop.name + "_last_good.pdrk");
      nn::save_checkpoint(keep, params);
      throw NumericError(loop.name + ": non-finite loss or gradient at step " + std::to_string(step) +
                         " (loss " + std::to_string(mean_loss) + "); last good parameters saved to " + keep.string());
    }
    adam.step(params, total);
    result.losses.push_back(mean_loss);
    if (step % 50 == 0 || step == 1) {
      std::ostringstream msg;
      msg << loop.name << " step " << step << " loss " << mean_loss;
      say(options, msg.str());
    }

    if (loop.eval_every > 0 && step % loop.steps_per_epoch == 0 &&
        (step / loop.steps_per_epoch) % loop.eval_every == 0) {
      evaluate_and_record(step);
      last_eval = step;
    }
  }
  if (last_eval != loop.steps) evaluate_and_record(loop.steps);

  result.best = best_checkpoint(result.records);
  nn::load_checkpoint_into(result.records[result.best].file, params);
  nn::save_checkpoint(dir.parent_path() / (loop.name + "_best.pdrk"), params);
  return result;
}

std::vector<data::DatasetPair> eval_subset(const std::vector<data::DatasetPair>& eval, std::size_t count) {
  return {eval.begin(), eval.begin() + static_cast<std::ptrdiff_t>(std::min(count, eval.size()))};
}

Loop make_loop(const RunManifest& m, const std::string& name, std::size_t steps, std::size_t train_size,
               const nn::AdamConfig& optimizer, std::uint64_t stage) {
  Loop loop;
  loop.name = name;
  loop.steps = steps;
  loop.batch = m.batch_size;
  loop.steps_per_epoch = std::max<std::size_t>(1, (train_size + m.batch_size - 1) / m.batch_size);
  loop.eval_every = m.eval_every;
  loop.optimizer = optimizer;
  loop.seed = derive_seed(m.seed, stage);
  return loop;
}

}  // namespace

TrainResult train_cgnet(const RunManifest& m, denoiser::Denoiser& net, const std::vector<data::DatasetPair>& train,
                        const std::vector<data::DatasetPair>& eval, const TrainOptions& options) {
  if (train.empty()) throw IoError("train_cgnet: no training pairs");
  if (eval.empty()) throw IoError("train_cgnet: no held-out pairs");
  if (!net.config().use_step_embedding) throw ConfigError("train_cgnet: network has no step embedding");
  const auto sched = schedule::DiffusionSchedule::from_config(m.schedule);
  const auto plan = m.eval_accel_steps ? schedule::build_accelerated(sched, *m.eval_accel_steps, m.schedule.accel_spacing)
                                       : schedule::full_plan(sched);
  const auto held_out = eval_subset(eval, m.eval_pairs);
  const auto loop = make_loop(m, "cgnet", m.cgnet_steps, train.size(), m.cgnet_optimizer, 1);

  const DrawFn draw = [&](std::mt19937_64& rng) {
    const auto& src = train[std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng)];
    const auto t = data::sample_transform(m.cgnet_augment, rng);
    Example e;
    e.partial = t.apply(src.partial);
    e.complete = t.apply(src.complete);
    e.t = std::uniform_int_distribution<std::size_t>(1, sched.steps())(rng);
    e.noise = schedule::gaussian_points(e.complete.size(), rng);
    return e;
  };
  const LossFn loss = [&](const Example& e) {
    const auto x_t = schedule::forward_sample(e.complete.points, e.t, e.noise, sched);
    const auto predicted = net.forward(x_t, net.encode_condition(e.partial), e.t);
    return metrics::ddpm_loss(points_tensor(e.noise), predicted);
  };
  const EvalFn eval_fn = [&] {
    return mean_coarse_cd(net, held_out, held_out.front().complete.size(), plan, derive_seed(m.seed, 2),
                          options.threads);
  };
  return run_loop(loop, net, m.output_dir / "cgnet", draw, loss, eval_fn, options);
}

TrainResult train_rfnet(const RunManifest& m, denoiser::Denoiser& net, const std::vector<data::DatasetPair>& train,
                        const std::vector<data::DatasetPair>& eval, const TrainOptions& options) {
  if (train.empty()) throw IoError("train_rfnet: no training pairs");
  for (const auto& p : train)
    if (p.coarse.empty()) throw IoError("train_rfnet: pair " + p.shape_id + "_" + p.view_id + " has no cached coarse clouds");
  const auto held_out = eval_subset(eval, m.eval_pairs);
  if (held_out.empty()) throw IoError("train_rfnet: no held-out pairs");
  for (const auto& p : held_out)
    if (p.coarse.empty()) throw IoError("train_rfnet: held-out pair " + p.shape_id + " has no cached coarse clouds");
  if (net.config().use_step_embedding) throw ConfigError("train_rfnet: network uses a step embedding");
  const bool dense_loss = net.config().upsample_factor > 1;
  const auto loop = make_loop(m, "rfnet", m.rfnet_steps, train.size(), m.rfnet_optimizer, 4);

  const DrawFn draw = [&](std::mt19937_64& rng) {
    const auto& src = train[std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng)];
    const auto& coarse = src.coarse[std::uniform_int_distribution<std::size_t>(0, src.coarse.size() - 1)(rng)];
    const auto t = data::sample_transform(m.rfnet_augment, rng);
    Example e;
    e.partial = t.apply(src.partial);
    e.complete = t.apply(src.complete);
    e.coarse = t.apply(coarse);
    return e;
  };
  const LossFn loss = [&](const Example& e) {
    const auto r = denoiser::rfnet_forward(net, e.coarse.points, net.encode_condition(e.partial));
    auto value = metrics::chamfer_loss(r.refined, e.complete.points);
    if (dense_loss) value = nn::add(value, metrics::chamfer_loss(r.dense, e.complete.points));
    return value;
  };
  const EvalFn eval_fn = [&] {
    std::vector<double> cds(held_out.size());
    parallel_for(held_out.size(), options.threads, [&](std::size_t i) {
      const auto v = refine(net, held_out[i].coarse.front().points, held_out[i].partial);
      cds[i] = metrics::chamfer(v, held_out[i].complete.points);
    });
    double total = 0;
    for (double c : cds) total += c;
    return total / static_cast<double>(cds.size());
  };
  return run_loop(loop, net, m.output_dir / "rfnet", draw, loss, eval_fn, options);
}

}  // namespace pdr::harness
