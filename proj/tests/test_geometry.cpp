// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <map>

#include "pdr/error.hpp"
#include "pdr/geometry/cloud_io.hpp"
#include "pdr/geometry/neighbors.hpp"
#include "pdr/geometry/point_cloud.hpp"
#include "pdr/nn/ops.hpp"
#include "support.hpp"

using namespace pdr;
using namespace pdr::geometry;
using test::random_points;

namespace {

// Greedy max-min selection recomputed from scratch at every step.
std::vector<std::size_t> fps_oracle(const std::vector<Vec3>& p, std::size_t m) {
  std::size_t first = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] < p[first]) first = i;
  std::vector<std::size_t> chosen{first};
  while (chosen.size() < m) {
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (auto c : chosen) d = std::min(d, squared_distance(p[i], p[c]));
      if (d > best || (d == best && p[i] < p[arg])) {
        best = d;
        arg = i;
      }
    }
    chosen.push_back(arg);
  }
  return chosen;
}

}  // namespace

TEST(PointCloud, ValidateRejectsBadClouds) {
  PointCloud empty;
  EXPECT_THROW(empty.validate(), ArgumentError);
  PointCloud nan({{0, std::nan(""), 0}});
  EXPECT_THROW(nan.validate(), ArgumentError);
  PointCloud labels({{0, 0, 0}, {1, 1, 1}});
  labels.labels = {1, 0};
  EXPECT_THROW(labels.validate(), ArgumentError);
}

TEST(Fps, MatchesGreedyOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_points(60, rng);
    EXPECT_EQ(farthest_point_sample(p, 17), fps_oracle(p, 17));
  }
}

TEST(Fps, MirroredTiesIgnoreInputOrder) {
  std::mt19937_64 rng(12);
  auto p = random_points(30, rng);
  for (std::size_t i = 0; i < 30; ++i) p.push_back({p[i][0], p[i][1], -p[i][2]});
  std::vector<std::size_t> perm(p.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> q;
  for (auto i : perm) q.push_back(p[i]);
  const auto a = farthest_point_sample(p, 40);
  const auto b = farthest_point_sample(q, 40);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(p[a[i]], q[b[i]]);
}

TEST(Fps, Errors) {
  std::mt19937_64 rng(2);
  const auto p = random_points(5, rng);
  EXPECT_THROW(farthest_point_sample(p, 6), ArgumentError);
  EXPECT_EQ(farthest_point_sample(p, 5).size(), 5u);
}

TEST(BallQuery, RealSlotsLieWithinRadius) {
  std::mt19937_64 rng(3);
  const auto src = random_points(200, rng);
  const auto centers = random_points(30, rng);
  const double r = 0.4;
  const std::size_t k = 8;
  const auto t = ball_query(src, centers, r, k, rng);
  ASSERT_EQ(t.indices.size(), centers.size() * k);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::size_t inside = 0;
    for (const auto& s : src) inside += squared_distance(s, centers[c]) <= r * r;
    EXPECT_EQ(t.real_count(c), std::min(inside, k));
    for (std::size_t j = 0; j < k; ++j) {
      if (t.is_dummy(c, j)) {
        EXPECT_EQ(t.index(c, j), -1);
      } else {
        EXPECT_LE(squared_distance(src[static_cast<std::size_t>(t.index(c, j))], centers[c]), r * r);
      }
    }
  }
}

TEST(BallQuery, KeepsEveryCandidateWhenFewerThanK) {
  const std::vector<Vec3> src{{0, 0, 0}, {0.1, 0, 0}, {0.5, 0, 0}, {0, 0.2, 0}};
  const std::vector<Vec3> centers{{0, 0, 0}};
  std::mt19937_64 rng(4);
  const auto t = ball_query(src, centers, 0.25, 6, rng);
  std::vector<std::int64_t> real;
  for (std::size_t j = 0; j < 6; ++j)
    if (!t.is_dummy(0, j)) real.push_back(t.index(0, j));
  std::sort(real.begin(), real.end());
  EXPECT_EQ(real, (std::vector<std::int64_t>{0, 1, 3}));
  EXPECT_EQ(t.total_real(), 3u);
}

TEST(BallQuery, SubsetIsUniform) {
  // Ten candidates, k = 5: each is kept with probability 1/2.
  std::vector<Vec3> src;
  for (int i = 0; i < 10; ++i) src.push_back({0.01 * i, 0, 0});
  const std::vector<Vec3> centers{{0, 0, 0}};
  std::vector<int> hits(10, 0);
  const int trials = 4000;
  std::mt19937_64 rng(5);
  for (int t = 0; t < trials; ++t) {
    const auto table = ball_query(src, centers, 1.0, 5, rng);
    for (std::size_t j = 0; j < 5; ++j) ++hits[static_cast<std::size_t>(table.index(0, j))];
  }
  // Binomial(4000, 0.5): sd = 31.6; allow 5 sd.
  for (int h : hits) EXPECT_NEAR(h, trials / 2, 5 * 31.7);
}

TEST(BallQuery, IndependentOfCenterOrder) {
  std::mt19937_64 rng(6);
  const auto src = random_points(300, rng);
  auto centers = random_points(12, rng);
  std::mt19937_64 a(77), b(77);
  const auto t1 = ball_query(src, centers, 0.8, 6, a);
  std::vector<Vec3> reversed(centers.rbegin(), centers.rend());
  const auto t2 = ball_query(src, reversed, 0.8, 6, b);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(t1.index(c, j), t2.index(centers.size() - 1 - c, j));
    }
  }
}

TEST(BallQuery, Errors) {
  std::mt19937_64 rng(7);
  const auto src = random_points(5, rng);
  EXPECT_THROW(ball_query(src, src, 0.0, 4, rng), ArgumentError);
  EXPECT_THROW(ball_query(src, src, 0.5, 0, rng), ArgumentError);
  EXPECT_THROW(ball_query({}, src, 0.5, 2, rng), ArgumentError);
}

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  const auto src = random_points(50, rng);
  const auto centers = random_points(10, rng);
  const auto t = knn_query(src, centers, 5);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::vector<std::pair<double, std::int64_t>> all;
    for (std::size_t i = 0; i < src.size(); ++i)
      all.emplace_back(squared_distance(src[i], centers[c]), static_cast<std::int64_t>(i));
    std::sort(all.begin(), all.end());
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(t.index(c, j), all[j].second);
    EXPECT_EQ(t.real_count(c), 5u);
  }
  EXPECT_THROW(knn_query(src, centers, 51), ArgumentError);
}

TEST(Compact, PacksRealSlots) {
  NeighborTable t;
  t.center_count = 3;
  t.k = 2;
  t.indices = {4, -1, -1, -1, 7, 2};
  t.real = {1, 0, 0, 0, 1, 1};
  const auto c = compact(t);
  EXPECT_EQ(c.offsets, (std::vector<std::size_t>{0, 1, 1, 3}));
  EXPECT_EQ(c.sources, (std::vector<std::int64_t>{4, 7, 2}));
  EXPECT_EQ(c.centers, (std::vector<std::size_t>{0, 2, 2}));
}

TEST(Group, LayoutAndDummies) {
  const std::vector<Vec3> src{{1, 0, 0}, {0, 2, 0}};
  const std::vector<Vec3> centers{{0, 0, 0}};
  NeighborTable t;
  t.center_count = 1;
  t.k = 3;
  t.indices = {1, -1, 0};
  t.real = {1, 0, 1};
  const auto f = nn::Tensor::constant({2, 2}, {10, 11, 20, 21});
  const auto g = group(f, t, centers, src);
  ASSERT_EQ(g.shape(), (nn::Shape{1, 3, 5}));
  const std::vector<double> expected{20, 21, 0, 2, 0, 0, 0, 0, 0, 0, 10, 11, 1, 0, 0};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(g[i], expected[i]);
  const auto off = relative_offsets(t, centers, src);
  EXPECT_EQ(off, (std::vector<double>{0, 2, 0, 0, 0, 0, 1, 0, 0}));
}

TEST(ThreeInterpolate, InverseSquaredDistanceWeights) {
  const std::vector<Vec3> coarse{{0, 0, 0}, {2, 0, 0}, {0, 3, 0}, {10, 10, 10}};
  const std::vector<double> feat{1, 2, 3, 100};
  const std::vector<Vec3> fine{{1, 0, 0}, {2, 0, 0}};
  const auto out = three_interpolate(coarse, feat, 1, fine);
  // Point (1,0,0): squared distances 1, 1, 10.
  const double w0 = 1, w1 = 1, w2 = 0.1;
  EXPECT_NEAR(out[0], (w0 * 1 + w1 * 2 + w2 * 3) / (w0 + w1 + w2), 1e-15);
  EXPECT_EQ(out[1], 2.0);
}

TEST(CloudIo, RoundTripWithFeaturesAndLabels) {
  test::TempDir dir("cloud");
  std::mt19937_64 rng(9);
  PointCloud c(random_points(17, rng));
  c.feature_dim = 2;
  for (std::size_t i = 0; i < 34; ++i) c.features.push_back(0.25 * static_cast<double>(i) - 3);
  for (std::size_t i = 0; i < 17; ++i) c.labels.push_back(i % 3 ? 1 : -1);
  save_cloud(dir.path() / "c.pdrc", c);
  EXPECT_EQ(load_cloud(dir.path() / "c.pdrc"), c);
}

TEST(CloudIo, RejectsCorruptFiles) {
  test::TempDir dir("cloud-bad");
  std::mt19937_64 rng(10);
  const PointCloud c(random_points(8, rng));
  const auto file = dir.path() / "c.pdrc";
  save_cloud(file, c);
  std::filesystem::resize_file(file, std::filesystem::file_size(file) - 5);
  EXPECT_THROW(load_cloud(file), IoError);
  {
    std::ofstream(dir.path() / "junk.pdrc") << "not a cloud";
  }
  EXPECT_THROW(load_cloud(dir.path() / "junk.pdrc"), IoError);
  EXPECT_THROW(load_cloud(dir.path() / "missing.pdrc"), IoError);
}

TEST(CloudIo, PlyRoundTrip) {
  test::TempDir dir("ply");
  std::mt19937_64 rng(11);
  const PointCloud c(random_points(20, rng));
  save_ply(dir.path() / "c.ply", c);
  const auto back = load_ply(dir.path() / "c.ply");
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int a = 0; a < 3; ++a) EXPECT_EQ(back.points[i][a], c.points[i][a]);
}

TEST(CloudIo, PlyIgnoresExtraProperties) {
  test::TempDir dir("ply-extra");
  {
    std::ofstream out(dir.path() / "c.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 2\nproperty float nx\nproperty float x\n"
           "property float y\nproperty float z\nend_header\n9 1 2 3\n9 4 5 6\n";
  }
  const auto c = load_ply(dir.path() / "c.ply");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], (Vec3{4, 5, 6}));
}
