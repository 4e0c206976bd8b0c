// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "pdr/error.hpp"
#include "pdr/nn/layers.hpp"
#include "pdr/nn/ops.hpp"
#include "pdr/nn/optim.hpp"
#include "pdr/nn/parameters.hpp"
#include "support.hpp"

using namespace pdr;
using namespace pdr::nn;
using test::check_gradients;
using test::random_parameter;

namespace {

// sum(y * w) with a fixed random w, so every output entry gets a distinct weight.
struct Probe {
  Tensor w;
  Tensor operator()(const Tensor& y) {
    if (!w.defined()) {
      std::mt19937_64 rng(99);
      std::normal_distribution<double> g;
      std::vector<double> v(y.numel());
      for (auto& x : v) x = g(rng);
      w = Tensor::constant(y.shape(), std::move(v));
    }
    return sum(mul(y, w));
  }
};

void expect_gradients(const std::function<Tensor(Probe&)>& f, const std::vector<Tensor>& leaves, double tol = 1e-5) {
  Probe probe;
  const auto r = check_gradients([&] { return f(probe); }, leaves);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_relative_error, tol);
}

}  // namespace

TEST(Tensor, ConstantAndShape) {
  const auto t = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_DOUBLE_EQ(t[4], 5);
  EXPECT_THROW(Tensor::constant({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(t.item(), DimensionError);
}

TEST(Tape, RecordsOnlyWithGradInputs) {
  Tape tape;
  TapeScope scope(tape);
  const auto a = Tensor::constant({2}, {1, 2});
  const auto b = add(a, a);
  EXPECT_FALSE(b.requires_grad());
  EXPECT_EQ(tape.node_count(), 0u);
  const auto p = Tensor::parameter({2}, {1, 2});
  const auto c = add(p, a);
  EXPECT_TRUE(c.requires_grad());
  EXPECT_EQ(tape.node_count(), 1u);
}

TEST(Tape, BackwardTwiceThrows) {
  const auto p = Tensor::parameter({1}, {3});
  Tape tape;
  TapeScope scope(tape);
  const auto l = sum(mul(p, p));
  tape.backward(l);
  EXPECT_NEAR(tape.grad(p)[0], 6, 1e-15);
  EXPECT_THROW(tape.backward(l), TapeError);
}

TEST(Tape, NonScalarLossThrows) {
  const auto p = Tensor::parameter({2}, {3, 4});
  Tape tape;
  TapeScope scope(tape);
  EXPECT_THROW(tape.backward(scale(p, 2)), TapeError);
}

TEST(Tape, NoGradScopeSuppressesRecording) {
  const auto p = Tensor::parameter({2}, {3, 4});
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope off;
    const auto y = mul(p, p);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_EQ(tape.node_count(), 0u);
}

TEST(Tape, UnreachedLeafHasZeroGrad) {
  const auto p = Tensor::parameter({2}, {3, 4});
  const auto q = Tensor::parameter({3}, {1, 1, 1});
  Tape tape;
  TapeScope scope(tape);
  tape.backward(sum(p));
  EXPECT_EQ(tape.grad(q), (std::vector<double>{0, 0, 0}));
  EXPECT_FALSE(tape.has_grad(q));
}

TEST(Tape, SharedSubexpressionAccumulates) {
  const auto p = Tensor::parameter({1}, {2});
  Tape tape;
  TapeScope scope(tape);
  const auto y = mul(p, p);       // p^2
  const auto z = add(y, mul(y, p));  // p^2 + p^3
  tape.backward(sum(z));
  EXPECT_NEAR(tape.grad(p)[0], 2 * 2 + 3 * 4, 1e-14);
}

TEST(Ops, MatmulValues) {
  const auto a = Tensor::constant({2, 2}, {1, 2, 3, 4});
  const auto b = Tensor::constant({2, 1}, {5, 6});
  const auto c = matmul(a, b);
  EXPECT_EQ(c.values()[0], 17);
  EXPECT_EQ(c.values()[1], 39);
  EXPECT_THROW(matmul(a, Tensor::constant({3, 1}, {1, 2, 3})), DimensionError);
}

TEST(OpsGrad, Matmul) {
  std::mt19937_64 rng(1);
  const auto a = random_parameter({2, 3, 4}, rng);
  const auto b = random_parameter({4, 5}, rng);
  expect_gradients([&](Probe& p) { return p(matmul(a, b)); }, {a, b});
}

TEST(OpsGrad, Elementwise) {
  std::mt19937_64 rng(2);
  const auto a = random_parameter({3, 4}, rng);
  const auto b = random_parameter({3, 4}, rng);
  expect_gradients([&](Probe& p) { return p(add(a, b)); }, {a, b});
  expect_gradients([&](Probe& p) { return p(sub(a, b)); }, {a, b});
  expect_gradients([&](Probe& p) { return p(mul(a, b)); }, {a, b});
  expect_gradients([&](Probe& p) { return p(scale(a, -1.7)); }, {a});
}

TEST(OpsGrad, BiasAdd) {
  std::mt19937_64 rng(3);
  const auto x = random_parameter({2, 3, 4}, rng);
  const auto b = random_parameter({4}, rng);
  expect_gradients([&](Probe& p) { return p(bias_add(x, b)); }, {x, b});
}

TEST(OpsGrad, Activations) {
  std::mt19937_64 rng(4);
  const auto x = random_parameter({5, 6}, rng, 3);
  expect_gradients([&](Probe& p) { return p(sigmoid(x)); }, {x});
  expect_gradients([&](Probe& p) { return p(swish(x)); }, {x});
  expect_gradients([&](Probe& p) { return p(softmax_lastdim(x)); }, {x});
  // Entries well away from the kink.
  auto v = x.detach().values();
  std::vector<double> away(v.begin(), v.end());
  for (auto& e : away) e = e >= 0 ? e + 0.1 : e - 0.1;
  const auto y = Tensor::parameter({5, 6}, away);
  expect_gradients([&](Probe& p) { return p(relu(y)); }, {y});
}

TEST(Ops, SwishMatchesDefinition) {
  const auto x = Tensor::constant({5}, {-40, -1, 0, 0.5, 30});
  const auto y = swish(x);
  for (std::size_t i = 0; i < 5; ++i) {
    const double v = x[i];
    EXPECT_NEAR(y[i], v / (1 + std::exp(-v)), 1e-15 * std::max(1.0, std::abs(v)));
  }
}

TEST(Ops, NeighborSoftmaxMasksDummies) {
  std::mt19937_64 rng(5);
  const auto s = random_parameter({3, 4, 2}, rng, 5);
  const std::vector<std::uint8_t> mask{1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0};
  const auto w = neighbor_softmax(s, mask);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      double total = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        const double v = w[(i * 4 + j) * 2 + c];
        if (!mask[i * 4 + j]) {
          EXPECT_EQ(v, 0.0);
        }
        total += v;
      }
      if (i < 2) {
        EXPECT_NEAR(total, 1, 1e-15);
      } else {
        EXPECT_EQ(total, 0.0);
      }
    }
  }
  expect_gradients([&](Probe& p) { return p(neighbor_softmax(s, mask)); }, {s});
}

TEST(OpsGrad, ShapeOps) {
  std::mt19937_64 rng(6);
  const auto a = random_parameter({3, 2}, rng);
  const auto b = random_parameter({3, 4}, rng);
  expect_gradients([&](Probe& p) { return p(concat_lastdim(a, b)); }, {a, b});
  expect_gradients([&](Probe& p) { return p(slice_lastdim(b, 1, 3)); }, {b});
  expect_gradients([&](Probe& p) { return p(slice_rows(b, 1, 3)); }, {b});
  expect_gradients([&](Probe& p) { return p(reshape(b, {2, 6})); }, {b});
  expect_gradients([&](Probe& p) { return p(repeat_neighbors(a, 3)); }, {a});
  const auto v = random_parameter({4}, rng);
  expect_gradients([&](Probe& p) { return p(tile_rows(v, 3)); }, {v});
}

TEST(OpsGrad, MaxReductions) {
  // Distinct, well-separated values so the argmax is stable under probing.
  const auto x = Tensor::parameter({3, 3}, {0.1, 0.9, 0.5, 0.7, 0.2, 0.3, 0.4, 0.6, 0.8});
  expect_gradients([&](Probe& p) { return p(max_lastdim(x)); }, {x});
  expect_gradients([&](Probe& p) { return p(max_rows(x)); }, {x});
  const auto m = max_rows(x);
  EXPECT_EQ(m[0], 0.7);
  EXPECT_EQ(m[1], 0.9);
  EXPECT_EQ(m[2], 0.8);
}

TEST(OpsGrad, GatherAndWeightedSum) {
  std::mt19937_64 rng(7);
  const auto x = random_parameter({4, 3}, rng);
  const std::vector<std::int64_t> idx{2, -1, 0, 2, 3};
  expect_gradients([&](Probe& p) { return p(gather_rows(x, idx)); }, {x});
  const auto g = gather_rows(x.detach(), idx);
  EXPECT_EQ(g[3], 0.0);
  EXPECT_EQ(g[0], x[6]);

  const auto values = random_parameter({2, 3, 4}, rng);
  const auto weights = random_parameter({2, 3, 4}, rng);
  expect_gradients([&](Probe& p) { return p(weighted_sum(values, weights)); }, {values, weights});
}

TEST(OpsGrad, Segments) {
  std::mt19937_64 rng(8);
  const std::vector<std::size_t> offsets{0, 2, 2, 5};
  const auto x = random_parameter({3, 2}, rng);
  const auto s = random_parameter({5, 2}, rng, 3);
  const auto v = random_parameter({5, 2}, rng);
  expect_gradients([&](Probe& p) { return p(repeat_segments(x, offsets)); }, {x});
  expect_gradients([&](Probe& p) { return p(segment_softmax(s, offsets)); }, {s});
  expect_gradients([&](Probe& p) { return p(segment_weighted_sum(v, s, offsets)); }, {v, s});
  const auto w = segment_softmax(s.detach(), offsets);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(w[0 * 2 + c] + w[1 * 2 + c], 1, 1e-15);
    EXPECT_NEAR(w[2 * 2 + c] + w[3 * 2 + c] + w[4 * 2 + c], 1, 1e-15);
  }
  const auto out = segment_weighted_sum(v.detach(), w, offsets);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[3], 0.0);
}

TEST(Ops, SegmentPathsMatchDensePaths) {
  // Two centers with k = 3; center 0 has 2 real slots, center 1 has 3.
  std::mt19937_64 rng(9);
  const auto s = random_parameter({5, 2}, rng, 2).detach();
  const auto v = random_parameter({5, 2}, rng).detach();
  const std::vector<std::size_t> offsets{0, 2, 5};
  std::vector<double> sd(12, 0.0), vd(12, 0.0);
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1};
  const std::size_t dense_row[5] = {0, 1, 3, 4, 5};
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      sd[dense_row[r] * 2 + c] = s[r * 2 + c];
      vd[dense_row[r] * 2 + c] = v[r * 2 + c];
    }
  const auto wd = neighbor_softmax(Tensor::constant({2, 3, 2}, sd), mask);
  const auto od = weighted_sum(Tensor::constant({2, 3, 2}, vd), wd);
  const auto orag = segment_weighted_sum(v, segment_softmax(s, offsets), offsets);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(od[i], orag[i], 1e-15);
}

TEST(OpsGrad, Reductions) {
  std::mt19937_64 rng(10);
  const auto a = random_parameter({3, 4}, rng);
  const auto b = random_parameter({3, 4}, rng);
  const auto r1 = check_gradients([&] { return sum(mul(a, a)); }, {a});
  EXPECT_LT(r1.max_relative_error, 1e-7);
  const auto r2 = check_gradients([&] { return mean(mul(a, b)); }, {a, b});
  EXPECT_LT(r2.max_relative_error, 1e-7);
  const auto r3 = check_gradients([&] { return mse_loss(a, b); }, {a, b});
  EXPECT_LT(r3.max_relative_error, 1e-7);
}

TEST(Linear, ComputesAffineMap) {
  ParameterStore store;
  std::mt19937_64 rng(11);
  const auto layer = Linear::create(store, "fc", 3, 2, rng);
  EXPECT_EQ(store.size(), 2u);
  const auto x = Tensor::constant({1, 3}, {1, 2, 3});
  const auto y = layer(x);
  const auto w = layer.weight.values();
  const auto b = layer.bias.values();
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(y[j], 1 * w[0 * 2 + j] + 2 * w[1 * 2 + j] + 3 * w[2 * 2 + j] + b[j], 1e-15);
  }
  const double bound = 1 / std::sqrt(3.0);
  for (double v : w) EXPECT_LE(std::abs(v), bound);
}

TEST(Parameters, DuplicateNameThrows) {
  ParameterStore store;
  std::mt19937_64 rng(12);
  store.create("a", {2}, 2, rng);
  EXPECT_THROW(store.create("a", {2}, 2, rng), ConfigError);
  EXPECT_THROW(store.get("b"), ConfigError);
}

TEST(Parameters, CheckpointRoundTrip) {
  test::TempDir dir("ckpt");
  ParameterStore store;
  std::mt19937_64 rng(13);
  store.create("layer.weight", {3, 4}, 3, rng);
  store.create("layer.bias", {4}, 3, rng);
  const auto file = dir.path() / "p.pdrk";
  save_checkpoint(file, store);
  const auto loaded = load_checkpoint(file);
  ASSERT_EQ(loaded.names(), store.names());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto a = store.tensors()[i].values();
    const auto b = loaded.tensors()[i].values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }

  ParameterStore other;
  other.create("layer.weight", {3, 5}, 3, rng);
  other.create("layer.bias", {5}, 3, rng);
  EXPECT_THROW(load_checkpoint_into(file, other), ConfigError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.pdrk"), IoError);
}

TEST(Parameters, TruncatedCheckpointThrows) {
  test::TempDir dir("ckpt-trunc");
  ParameterStore store;
  std::mt19937_64 rng(14);
  store.create("w", {8, 8}, 8, rng);
  const auto file = dir.path() / "p.pdrk";
  save_checkpoint(file, store);
  std::filesystem::resize_file(file, std::filesystem::file_size(file) - 9);
  EXPECT_THROW(load_checkpoint(file), IoError);
}

TEST(Adam, MatchesHandComputedSteps) {
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  std::vector<double> p{1.0};
  AdamState s;
  double m = 0, v = 0, ref = 1.0;
  const double grads[] = {0.5, -0.25, 2.0};
  for (std::size_t t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    adam_step(p, std::vector<double>{g}, s, cfg);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    ref -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p[0], ref, 1e-15);
  }
  EXPECT_EQ(s.step, 3u);
}

TEST(Adam, ReducesQuadratic) {
  ParameterStore store;
  store.add("x", Tensor::parameter({2}, {3, -2}));
  Adam adam(store, {0.05});
  for (int i = 0; i < 500; ++i) {
    Tape tape;
    TapeScope scope(tape);
    const auto& x = store.get("x");
    tape.backward(sum(mul(x, x)));
    adam.step(store, {tape.grad(x)});
  }
  for (double v : store.get("x").values()) EXPECT_LT(std::abs(v), 1e-2);
}
