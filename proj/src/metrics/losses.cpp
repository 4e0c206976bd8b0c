// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"
#include "pdr/nn/ops.hpp"

namespace pdr::metrics {

nn::Tensor ddpm_loss(const nn::Tensor& true_noise, const nn::Tensor& predicted_noise) {
  return nn::mse_loss(predicted_noise, true_noise);
}

nn::Tensor chamfer_loss(const nn::Tensor& v, std::span<const Vec3> x) {
  if (v.rank() != 2 || v.dim(1) != 3) {
    throw DimensionError("chamfer_loss: expected [N, 3], got " + nn::shape_string(v.shape()));
  }
  if (x.empty()) throw ArgumentError("chamfer_loss: target cloud is empty");
  const std::size_t n = v.dim(0), m = x.size();
  const auto pv = v.values();
  const auto point = [&](std::size_t i) { return Vec3{pv[i * 3], pv[i * 3 + 1], pv[i * 3 + 2]}; };

  std::vector<std::size_t> v_to_x(n), x_to_v(m);
  std::vector<double> best_x(m, std::numeric_limits<double>::infinity());
  double forward = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = point(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = geometry::squared_distance(p, x[j]);
      if (d < best) {
        best = d;
        v_to_x[i] = j;
      }
      if (d < best_x[j]) {
        best_x[j] = d;
        x_to_v[j] = i;
      }
    }
    forward += best;
  }
  double backward = 0;
  for (double d : best_x) backward += d;
  const double value = forward / static_cast<double>(n) + backward / static_cast<double>(m);

  std::vector<Vec3> targets(x.begin(), x.end());
  auto vn = v.node();
  const nn::Tensor inputs[] = {v};
  return nn::make_result(
      {1}, {value}, inputs,
      [vn, targets = std::move(targets), v_to_x = std::move(v_to_x), x_to_v = std::move(x_to_v), n, m](
          std::span<const double> g, std::span<const std::span<double>> gi) {
        const auto& pv = vn->value;
        const double fv = 2.0 * g[0] / static_cast<double>(n);
        const double fx = 2.0 * g[0] / static_cast<double>(m);
        for (std::size_t i = 0; i < n; ++i)
          for (int a = 0; a < 3; ++a) gi[0][i * 3 + a] += fv * (pv[i * 3 + a] - targets[v_to_x[i]][a]);
        for (std::size_t j = 0; j < m; ++j) {
          const auto i = x_to_v[j];
          for (int a = 0; a < 3; ++a) gi[0][i * 3 + a] += fx * (pv[i * 3 + a] - targets[j][a]);
        }
      });
}

}  // namespace pdr::metrics
