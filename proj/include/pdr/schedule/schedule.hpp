// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pdr/geometry/point_cloud.hpp"

namespace pdr::schedule {

using geometry::Vec3;

enum class Spacing { linear, quadratic };

Spacing parse_spacing(const std::string& name);
std::string to_string(Spacing spacing);

// Run-manifest block: {"T", "beta_1", "beta_T", "accel_steps", "accel_spacing"}.
struct ScheduleConfig {
  std::size_t steps = 1000;
  double beta_1 = 1e-4;
  double beta_T = 2e-2;
  std::optional<std::size_t> accel_steps;
  Spacing accel_spacing = Spacing::linear;
};

// Closed-form noise tables. Step indices are 1-based; alpha_bar(0) is 1.
class DiffusionSchedule {
 public:
  static DiffusionSchedule linear(std::size_t steps, double beta_1, double beta_T);
  static DiffusionSchedule from_config(const ScheduleConfig& config);

  std::size_t steps() const { return beta_.size(); }
  double beta(std::size_t t) const { return beta_[checked(t)]; }
  double alpha(std::size_t t) const { return 1.0 - beta(t); }
  double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bar_[checked(t)]; }
  double sigma(std::size_t t) const { return sigma_[checked(t)]; }

 private:
  std::size_t checked(std::size_t t) const;

  std::vector<double> beta_;       // index t - 1
  std::vector<double> alpha_bar_;  // index t - 1
  std::vector<double> sigma_;      // index t - 1
};

// Reverse-process plan over a strictly increasing subset of steps ending at
// T. Position i (1-based) runs the network at step kept_steps[i - 1] and
// uses the restricted tables beta'_i = 1 - abar(s_i) / abar(s_{i-1}).
struct AcceleratedSchedule {
  std::vector<std::size_t> kept_steps;
  std::vector<double> beta;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  std::size_t length() const { return kept_steps.size(); }
};

AcceleratedSchedule build_accelerated(const DiffusionSchedule& schedule, std::size_t n_steps,
                                      Spacing spacing = Spacing::linear);
// Every step kept; identical to the full reverse process.
AcceleratedSchedule full_plan(const DiffusionSchedule& schedule);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
std::vector<Vec3> forward_sample(std::span<const Vec3> x0, std::size_t t, std::span<const Vec3> noise,
                                 const DiffusionSchedule& schedule);
// x_t = sqrt(1 - beta_t) x_{t-1} + sqrt(beta_t) eps
std::vector<Vec3> chain_forward_step(std::span<const Vec3> x_prev, std::size_t t, std::span<const Vec3> noise,
                                     const DiffusionSchedule& schedule);
// x_{t-1} = (x_t - beta_t / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t) + sigma_t z, with z ignored at t = 1.
std::vector<Vec3> reverse_step(std::span<const Vec3> x_t, std::size_t t, std::span<const Vec3> predicted_noise,
                               std::span<const Vec3> z, const DiffusionSchedule& schedule);
// Same update at plan position `position` (1-based) of an accelerated plan.
std::vector<Vec3> reverse_step(std::span<const Vec3> x_t, std::size_t position,
                               std::span<const Vec3> predicted_noise, std::span<const Vec3> z,
                               const AcceleratedSchedule& plan);

// Noise that forward_sample would have used to reach x_t from a known x0.
std::vector<Vec3> oracle_noise(std::span<const Vec3> x_t, std::span<const Vec3> x0, double alpha_bar);

std::vector<Vec3> gaussian_points(std::size_t n, std::mt19937_64& rng);

}  // namespace pdr::schedule
