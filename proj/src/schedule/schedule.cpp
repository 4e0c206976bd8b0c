// SPDX-License-Identifier: Apache-2.0
#include "pdr/schedule/schedule.hpp"

#include <cmath>

#include "pdr/error.hpp"

namespace pdr::schedule {

Spacing parse_spacing(const std::string& name) {
  if (name == "linear") return Spacing::linear;
  if (name == "quadratic") return Spacing::quadratic;
  throw ConfigError("unknown accelerated spacing '" + name + "'");
}

std::string to_string(Spacing spacing) { return spacing == Spacing::linear ? "linear" : "quadratic"; }

DiffusionSchedule DiffusionSchedule::linear(std::size_t steps, double beta_1, double beta_T) {
  if (steps < 2) throw ConfigError("diffusion schedule needs T >= 2");
  if (!(beta_1 > 0) || !(beta_1 <= beta_T) || !(beta_T < 1)) {
    throw ConfigError("diffusion schedule requires 0 < beta_1 <= beta_T < 1");
  }
  DiffusionSchedule s;
  s.beta_.resize(steps);
  s.alpha_bar_.resize(steps);
  s.sigma_.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double beta = static_cast<double>(i) / static_cast<double>(steps - 1) * (beta_T - beta_1) + beta_1;
    const double prev = running;
    running *= 1.0 - beta;
    s.beta_[i] = beta;
    s.alpha_bar_[i] = running;
    s.sigma_[i] = std::sqrt((1.0 - prev) / (1.0 - running) * beta);
  }
  return s;
}

DiffusionSchedule DiffusionSchedule::from_config(const ScheduleConfig& config) {
  return linear(config.steps, config.beta_1, config.beta_T);
}

std::size_t DiffusionSchedule::checked(std::size_t t) const {
  if (t < 1 || t > beta_.size()) {
    throw ArgumentError("diffusion step " + std::to_string(t) + " outside 1.." + std::to_string(beta_.size()));
  }
  return t - 1;
}

AcceleratedSchedule build_accelerated(const DiffusionSchedule& schedule, std::size_t n_steps, Spacing spacing) {
  const std::size_t T = schedule.steps();
  if (n_steps < 2 || n_steps > T) {
    throw ConfigError("accelerated schedule needs 2 <= steps <= " + std::to_string(T) + ", got " +
                      std::to_string(n_steps));
  }
  std::vector<std::size_t> kept(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n_steps - 1);
    const double shaped = spacing == Spacing::linear ? frac : frac * frac;
    kept[i] = 1 + static_cast<std::size_t>(std::floor(shaped * static_cast<double>(T - 1) + 0.5));
  }
  for (std::size_t i = 1; i < n_steps; ++i) kept[i] = std::max(kept[i], kept[i - 1] + 1);
  for (std::size_t i = n_steps; i-- > 0;) kept[i] = std::min(kept[i], T - (n_steps - 1 - i));
  kept.front() = 1;
  kept.back() = T;

  AcceleratedSchedule plan;
  plan.kept_steps = kept;
  double prev = 1.0;
  for (auto s : kept) {
    const double abar = schedule.alpha_bar(s);
    const double beta = 1.0 - abar / prev;
    plan.beta.push_back(beta);
    plan.alpha_bar.push_back(abar);
    plan.sigma.push_back(std::sqrt((1.0 - prev) / (1.0 - abar) * beta));
    prev = abar;
  }
  return plan;
}

AcceleratedSchedule full_plan(const DiffusionSchedule& schedule) {
  AcceleratedSchedule plan;
  for (std::size_t t = 1; t <= schedule.steps(); ++t) {
    plan.kept_steps.push_back(t);
    plan.beta.push_back(schedule.beta(t));
    plan.alpha_bar.push_back(schedule.alpha_bar(t));
    plan.sigma.push_back(schedule.sigma(t));
  }
  return plan;
}

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": noise has " + std::to_string(b) + " points, cloud has " +
                         std::to_string(a));
  }
}

std::vector<Vec3> combine(std::span<const Vec3> x, double cx, std::span<const Vec3> y, double cy) {
  std::vector<Vec3> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int a = 0; a < 3; ++a) out[i][a] = cx * x[i][a] + cy * y[i][a];
  return out;
}

std::vector<Vec3> reverse_update(std::span<const Vec3> x_t, std::span<const Vec3> eps, std::span<const Vec3> z,
                                 double beta, double alpha_bar, double sigma, bool last) {
  require_same_size(x_t.size(), eps.size(), "reverse_step");
  if (!last) require_same_size(x_t.size(), z.size(), "reverse_step");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const double eps_coef = beta / std::sqrt(1.0 - alpha_bar);
  std::vector<Vec3> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    for (int a = 0; a < 3; ++a) {
      double v = inv_sqrt_alpha * (x_t[i][a] - eps_coef * eps[i][a]);
      if (!last) v += sigma * z[i][a];
      out[i][a] = v;
    }
  return out;
}

}  // namespace

std::vector<Vec3> forward_sample(std::span<const Vec3> x0, std::size_t t, std::span<const Vec3> noise,
                                 const DiffusionSchedule& schedule) {
  require_same_size(x0.size(), noise.size(), "forward_sample");
  const double abar = schedule.alpha_bar(t);
  return combine(x0, std::sqrt(abar), noise, std::sqrt(1.0 - abar));
}

std::vector<Vec3> chain_forward_step(std::span<const Vec3> x_prev, std::size_t t, std::span<const Vec3> noise,
                                     const DiffusionSchedule& schedule) {
  require_same_size(x_prev.size(), noise.size(), "chain_forward_step");
  const double beta = schedule.beta(t);
  return combine(x_prev, std::sqrt(1.0 - beta), noise, std::sqrt(beta));
}

std::vector<Vec3> reverse_step(std::span<const Vec3> x_t, std::size_t t, std::span<const Vec3> predicted_noise,
                               std::span<const Vec3> z, const DiffusionSchedule& schedule) {
  return reverse_update(x_t, predicted_noise, z, schedule.beta(t), schedule.alpha_bar(t), schedule.sigma(t), t == 1);
}

std::vector<Vec3> reverse_step(std::span<const Vec3> x_t, std::size_t position,
                               std::span<const Vec3> predicted_noise, std::span<const Vec3> z,
                               const AcceleratedSchedule& plan) {
  if (position < 1 || position > plan.length()) {
    throw ArgumentError("plan position " + std::to_string(position) + " outside 1.." +
                        std::to_string(plan.length()));
  }
  const auto i = position - 1;
  return reverse_update(x_t, predicted_noise, z, plan.beta[i], plan.alpha_bar[i], plan.sigma[i], position == 1);
}

std::vector<Vec3> oracle_noise(std::span<const Vec3> x_t, std::span<const Vec3> x0, double alpha_bar) {
  require_same_size(x_t.size(), x0.size(), "oracle_noise");
  const double s = std::sqrt(alpha_bar), inv = 1.0 / std::sqrt(1.0 - alpha_bar);
  std::vector<Vec3> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    for (int a = 0; a < 3; ++a) out[i][a] = (x_t[i][a] - s * x0[i][a]) * inv;
  return out;
}

std::vector<Vec3> gaussian_points(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> out(n);
  for (auto& p : out)
    for (auto& c : p) c = normal(rng);
  return out;
}

}  // namespace pdr::schedule
