// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "pdr/error.hpp"
#include "pdr/schedule/schedule.hpp"
#include "support.hpp"

using namespace pdr;
using namespace pdr::schedule;

TEST(Schedule, LinearBetasAndProducts) {
  const auto s = DiffusionSchedule::linear(10, 0.01, 0.1);
  double running = 1;
  for (std::size_t t = 1; t <= 10; ++t) {
    const double beta = 0.01 + (0.1 - 0.01) * static_cast<double>(t - 1) / 9.0;
    EXPECT_NEAR(s.beta(t), beta, 1e-16);
    running *= 1 - beta;
    EXPECT_NEAR(s.alpha_bar(t), running, 1e-15);
  }
  EXPECT_EQ(s.alpha_bar(0), 1.0);
}

TEST(Schedule, PosteriorSigma) {
  const auto s = DiffusionSchedule::linear(20, 1e-3, 0.2);
  EXPECT_EQ(s.sigma(1), 0.0);
  for (std::size_t t = 2; t <= 20; ++t) {
    const double v = (1 - s.alpha_bar(t - 1)) / (1 - s.alpha_bar(t)) * s.beta(t);
    EXPECT_NEAR(s.sigma(t) * s.sigma(t), v, 1e-15);
  }
}

TEST(Schedule, Errors) {
  EXPECT_THROW(DiffusionSchedule::linear(1, 1e-4, 2e-2), ConfigError);
  EXPECT_THROW(DiffusionSchedule::linear(10, 0.1, 0.01), ConfigError);
  EXPECT_THROW(DiffusionSchedule::linear(10, 0, 0.01), ConfigError);
  const auto s = DiffusionSchedule::linear(10, 1e-3, 1e-2);
  EXPECT_THROW(s.beta(0), ArgumentError);
  EXPECT_THROW(s.beta(11), ArgumentError);
  EXPECT_THROW(build_accelerated(s, 1), ConfigError);
  EXPECT_THROW(build_accelerated(s, 11), ConfigError);
  EXPECT_THROW(parse_spacing("cubic"), ConfigError);
}

TEST(Accelerated, PlanStructure) {
  const auto s = DiffusionSchedule::linear(100, 1e-3, 0.2);
  for (auto spacing : {Spacing::linear, Spacing::quadratic}) {
    for (std::size_t n : {2, 7, 20, 50, 100}) {
      const auto p = build_accelerated(s, n, spacing);
      ASSERT_EQ(p.length(), n);
      EXPECT_EQ(p.kept_steps.front(), 1u);
      EXPECT_EQ(p.kept_steps.back(), 100u);
      double prod = 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) EXPECT_LT(p.kept_steps[i - 1], p.kept_steps[i]);
        prod *= 1 - p.beta[i];
        // Restricted tables telescope back to the full schedule.
        EXPECT_NEAR(p.alpha_bar[i], s.alpha_bar(p.kept_steps[i]), 1e-14);
        EXPECT_NEAR(prod, p.alpha_bar[i], 1e-13);
      }
      EXPECT_EQ(p.sigma.front(), 0.0);
    }
  }
}

TEST(Accelerated, FullPlanMatchesSchedule) {
  const auto s = DiffusionSchedule::linear(30, 1e-3, 0.2);
  const auto full = full_plan(s);
  const auto same = build_accelerated(s, 30);
  for (std::size_t t = 1; t <= 30; ++t) {
    EXPECT_EQ(full.kept_steps[t - 1], t);
    EXPECT_EQ(same.kept_steps[t - 1], t);
    EXPECT_EQ(full.beta[t - 1], s.beta(t));
    EXPECT_NEAR(same.beta[t - 1], s.beta(t), 1e-14);
    EXPECT_EQ(full.sigma[t - 1], s.sigma(t));
  }
}

TEST(Forward, ClosedFormAndOracleNoise) {
  const auto s = DiffusionSchedule::linear(50, 1e-3, 0.2);
  std::mt19937_64 rng(1);
  const auto x0 = test::random_points(10, rng);
  const auto eps = gaussian_points(10, rng);
  const auto xt = forward_sample(x0, 30, eps, s);
  const double a = s.alpha_bar(30);
  for (std::size_t i = 0; i < 10; ++i)
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(xt[i][d], std::sqrt(a) * x0[i][d] + std::sqrt(1 - a) * eps[i][d], 1e-15);
  const auto back = oracle_noise(xt, x0, a);
  for (std::size_t i = 0; i < 10; ++i)
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(back[i][d], eps[i][d], 1e-13);
  EXPECT_THROW(forward_sample(x0, 30, gaussian_points(9, rng), s), DimensionError);
}

TEST(Reverse, SingleStepFormula) {
  const auto s = DiffusionSchedule::linear(10, 1e-2, 0.1);
  const std::vector<Vec3> x{{1, 2, 3}};
  const std::vector<Vec3> eps{{0.5, -0.5, 0.25}};
  const std::vector<Vec3> z{{1, 1, -1}};
  const auto y = reverse_step(x, 5, eps, z, s);
  for (int d = 0; d < 3; ++d) {
    const double expected = (x[0][d] - s.beta(5) / std::sqrt(1 - s.alpha_bar(5)) * eps[0][d]) / std::sqrt(s.alpha(5)) +
                            s.sigma(5) * z[0][d];
    EXPECT_NEAR(y[0][d], expected, 1e-15);
  }
  // z is ignored at t = 1.
  const auto last = reverse_step(x, 1, eps, z, s);
  const auto last0 = reverse_step(x, 1, eps, std::vector<Vec3>{{0, 0, 0}}, s);
  EXPECT_EQ(last, last0);
}

TEST(Reverse, OracleRecoversDataOnShortSchedule) {
  const auto s = DiffusionSchedule::linear(40, 1e-3, 0.2);
  std::mt19937_64 rng(2);
  const auto x0 = test::random_points(16, rng);
  for (auto plan : {full_plan(s), build_accelerated(s, 9)}) {
    auto x = gaussian_points(16, rng);
    for (std::size_t i = plan.length(); i >= 1; --i) {
      const auto eps = oracle_noise(x, x0, plan.alpha_bar[i - 1]);
      x = reverse_step(x, i, eps, gaussian_points(16, rng), plan);
    }
    for (std::size_t i = 0; i < 16; ++i)
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(x[i][d], x0[i][d], 1e-9);
  }
}

TEST(Forward, ChainMatchesMarginalMean) {
  // Short Monte-Carlo check; the acceptance suite runs the full-size version.
  const auto s = DiffusionSchedule::linear(100, 1e-3, 0.2);
  std::mt19937_64 rng(3);
  const std::vector<Vec3> x0{{0.7, -0.3, 0.1}};
  const std::size_t trials = 2000, t = 25;
  double sum = 0, sq = 0;
  for (std::size_t n = 0; n < trials; ++n) {
    std::vector<Vec3> x = x0;
    for (std::size_t k = 1; k <= t; ++k) x = chain_forward_step(x, k, gaussian_points(1, rng), s);
    sum += x[0][0];
    sq += x[0][0] * x[0][0];
  }
  const double mean = sum / trials;
  const double var = sq / trials - mean * mean;
  const double a = s.alpha_bar(t);
  EXPECT_NEAR(mean, std::sqrt(a) * 0.7, 4 * std::sqrt((1 - a) / trials));
  EXPECT_NEAR(var, 1 - a, 0.1 * (1 - a));
}

TEST(Gaussian, MomentsOfDraws) {
  std::mt19937_64 rng(4);
  const auto g = gaussian_points(20000, rng);
  double m = 0, v = 0;
  for (const auto& p : g)
    for (double c : p) {
      m += c;
      v += c * c;
    }
  m /= 60000;
  v = v / 60000 - m * m;
  EXPECT_NEAR(m, 0, 0.02);
  EXPECT_NEAR(v, 1, 0.03);
}
