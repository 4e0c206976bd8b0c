// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pdr/geometry/point_cloud.hpp"
#include "pdr/nn/tensor.hpp"

namespace pdr::test {

using geometry::Vec3;

inline std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> p(n);
  for (auto& q : p) q = {u(rng), u(rng), u(rng)};
  return p;
}

inline nn::Tensor random_parameter(nn::Shape shape, std::mt19937_64& rng, double scale = 1) {
  std::normal_distribution<double> g(0, scale);
  std::vector<double> v(nn::element_count(shape));
  for (auto& x : v) x = g(rng);
  return nn::Tensor::parameter(std::move(shape), std::move(v));
}

struct GradCheck {
  double max_relative_error = 0;
  std::size_t checked = 0;
  // Worst entry: leaf, index, analytic and numeric values.
  std::size_t worst_leaf = 0, worst_index = 0;
  double worst_analytic = 0, worst_numeric = 0;
};

// Compares tape gradients of a scalar loss against central differences.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
// When max_per_leaf > 0 only that many randomly chosen entries per leaf are probed.
// The five-point stencil has O(h^4) truncation error, so it tolerates a larger h
// and hence less cancellation noise.
inline GradCheck check_gradients(const std::function<nn::Tensor()>& loss, std::vector<nn::Tensor> leaves,
                                 double h = 1e-5, std::size_t max_per_leaf = 0, std::uint64_t seed = 1,
                                 double floor = 1e-7, bool five_point = false) {
  std::vector<std::vector<double>> analytic;
  {
    nn::Tape tape;
    nn::TapeScope scope(tape);
    const auto l = loss();
    tape.backward(l);
    for (const auto& t : leaves) analytic.push_back(tape.grad(t));
  }
  nn::NoGradScope no_grad;
  std::mt19937_64 rng(seed);
  GradCheck result;
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    auto values = leaves[p].mutable_values();
    std::vector<std::size_t> entries(values.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (max_per_leaf > 0 && entries.size() > max_per_leaf) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_per_leaf);
    }
    for (auto i : entries) {
      const double saved = values[i];
      const auto at = [&](double offset) {
        values[i] = saved + offset;
        return loss().item();
      };
      const double numeric = five_point ? (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h)
                                        : (at(h) - at(-h)) / (2 * h);
      values[i] = saved;
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_leaf = p;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
      ++result.checked;
    }
  }
  return result;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pdr-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pdr::test
