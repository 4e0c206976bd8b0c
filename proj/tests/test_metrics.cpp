// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <limits>

#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"
#include "pdr/nn/ops.hpp"
#include "support.hpp"

using namespace pdr;
using namespace pdr::metrics;
using test::random_points;

namespace {

double brute_emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0;
    for (std::size_t i = 0; i < a.size(); ++i) cost += std::sqrt(geometry::squared_distance(a[i], b[perm[i]]));
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(Chamfer, HandComputedValue) {
  const std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> x{{0, 0, 0}, {0, 2, 0}, {3, 0, 0}};
  // v->x: 0, 1. x->v: 0, 4, 4.
  EXPECT_DOUBLE_EQ(chamfer(v, x), 0.5 + 8.0 / 3.0);
  EXPECT_DOUBLE_EQ(one_sided_chamfer(v, x), 0.5);
  EXPECT_EQ(chamfer(x, x), 0.0);
  EXPECT_THROW(chamfer({}, x), ArgumentError);
}

TEST(Chamfer, MatchesDoubleLoop) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = random_points(10, rng);
    const auto x = random_points(13, rng);
    double ab = 0, ba = 0;
    for (const auto& p : v) {
      double m = 1e300;
      for (const auto& q : x) m = std::min(m, geometry::squared_distance(p, q));
      ab += m;
    }
    for (const auto& q : x) {
      double m = 1e300;
      for (const auto& p : v) m = std::min(m, geometry::squared_distance(p, q));
      ba += m;
    }
    EXPECT_EQ(chamfer(v, x), ab / 10 + ba / 13);
  }
}

TEST(F1, HandComputedValue) {
  const std::vector<Vec3> v{{0, 0, 0}, {0.001, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> x{{0, 0, 0}, {2, 0, 0}};
  // rho = 1e-4 on squared distances: v hits 2/3 (0 and 1e-6), x hits 1/2.
  const double p = 2.0 / 3.0, r = 0.5;
  EXPECT_DOUBLE_EQ(f1_score(v, x, 1e-4), 2 * p * r / (p + r));
  EXPECT_EQ(f1_score({{{5, 5, 5}}}, x, 1e-4), 0.0);
  EXPECT_THROW(f1_score(v, x, 0), ArgumentError);
}

TEST(Emd, ExactMatchesPermutationSearch) {
  std::mt19937_64 rng(2);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto a = random_points(n, rng);
      const auto b = random_points(n, rng);
      EXPECT_NEAR(emd_exact(a, b), brute_emd(a, b), 1e-12);
    }
  }
  EXPECT_THROW(emd_exact(random_points(3, rng), random_points(4, rng)), ArgumentError);
}

TEST(Emd, HungarianOnKnownMatrix) {
  const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  std::vector<std::size_t> assignment;
  EXPECT_EQ(hungarian_min_cost(cost, 3, &assignment), 5.0);
  EXPECT_EQ(assignment, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Emd, ApproxBoundsExact) {
  std::mt19937_64 rng(3);
  const auto a = random_points(64, rng);
  const auto b = random_points(64, rng);
  const double exact = emd_exact(a, b);
  const double approx = emd_approx(a, b);
  EXPECT_GE(approx, exact - 1e-9);
  EXPECT_LE(approx, exact * 1.01);
  EXPECT_LE(emd_approx(a, b, 20), emd_approx(a, b, 4) + 1e-12);
}

TEST(Emd, DispatchesBySize) {
  std::mt19937_64 rng(4);
  const auto a = random_points(8, rng);
  EXPECT_TRUE(emd(a, a).exact);
  EXPECT_EQ(emd(a, a).value, 0.0);
}

TEST(ScaleFit, RecoversPlantedScale) {
  std::mt19937_64 rng(5);
  const auto x = random_points(200, rng);
  for (double delta : {0.7, 1.0, 1.3}) {
    std::vector<Vec3> c;
    for (std::size_t i = 0; i < 80; ++i) c.push_back({x[i][0] / delta, x[i][1] / delta, x[i][2] / delta});
    const auto fit = fit_scale(c, x);
    EXPECT_NEAR(fit.scale, delta, 1e-6);
    EXPECT_EQ(fit.inconsistent, delta < kScaleLow || delta > kScaleHigh);
  }
  EXPECT_THROW(fit_scale(std::vector<Vec3>{{0, 0, 0}}, x), ArgumentError);
}

TEST(Losses, DdpmLossIsMeanSquare) {
  const auto a = nn::Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto b = nn::Tensor::constant({2, 3}, {0, 2, 3, 4, 5, 8});
  EXPECT_DOUBLE_EQ(ddpm_loss(a, b).item(), (1.0 + 4.0) / 6.0);
}

TEST(Losses, ChamferLossValueAndGradient) {
  std::mt19937_64 rng(6);
  const auto target = random_points(12, rng);
  const auto start = random_points(9, rng);
  std::vector<double> flat;
  for (const auto& p : start) flat.insert(flat.end(), p.begin(), p.end());
  const auto v = nn::Tensor::parameter({9, 3}, flat);
  EXPECT_NEAR(chamfer_loss(v, target).item(), chamfer(start, target), 1e-15);
  const auto r = test::check_gradients([&] { return chamfer_loss(v, target); }, {v}, 1e-6);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Report, JsonScalingAndAggregate) {
  std::mt19937_64 rng(7);
  const auto a = random_points(16, rng);
  const auto b = random_points(16, rng);
  const auto r = evaluate_pair(a, b, 1e-4);
  EXPECT_DOUBLE_EQ(r.cd, chamfer(a, b));
  EXPECT_DOUBLE_EQ(r.emd, emd_exact(a, b) / 16);
  const auto j = r.to_json();
  EXPECT_DOUBLE_EQ(j.at("cd").get<double>(), r.cd * 1e4);
  EXPECT_DOUBLE_EQ(j.at("emd").get<double>(), r.emd * 1e2);
  const std::vector<MetricReport> two{r, evaluate_pair(a, a, 1e-4)};
  const auto m = aggregate(two);
  EXPECT_DOUBLE_EQ(m.cd, r.cd / 2);
  EXPECT_DOUBLE_EQ(m.f1, (r.f1 + 1.0) / 2);
}
