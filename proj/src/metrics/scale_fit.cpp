// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"

namespace pdr::metrics {

using geometry::operator*;

namespace {
constexpr double kLow = 0.25;
constexpr double kHigh = 4.0;
constexpr int kGrid = 64;
}  // namespace

ScaleFit fit_scale(std::span<const Vec3> c, std::span<const Vec3> x) {
  if (c.empty() || x.empty()) throw ArgumentError("fit_scale: point clouds must be nonempty");
  bool degenerate = true;
  for (const auto& p : c)
    if (p[0] != 0 || p[1] != 0 || p[2] != 0) degenerate = false;
  if (degenerate) throw ArgumentError("fit_scale: incomplete cloud is all zeros, scale is undetermined");

  std::vector<Vec3> scaled(c.size());
  const auto objective = [&](double delta) {
    for (std::size_t i = 0; i < c.size(); ++i) scaled[i] = delta * c[i];
    return one_sided_chamfer(scaled, x);
  };

  // Log-spaced scan to bracket the basin, then golden-section inside it.
  const double log_lo = std::log(kLow), log_hi = std::log(kHigh);
  const double step = (log_hi - log_lo) / kGrid;
  int best_i = 0;
  double best_f = objective(kLow);
  for (int i = 1; i <= kGrid; ++i) {
    const double f = objective(std::exp(log_lo + step * i));
    if (f < best_f) {
      best_f = f;
      best_i = i;
    }
  }
  double a = std::exp(log_lo + step * std::max(best_i - 1, 0));
  double b = std::exp(log_lo + step * std::min(best_i + 1, kGrid));

  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  while (b - a > 1e-10) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }
  double delta = f1 <= f2 ? x1 : x2;
  double f = std::min(f1, f2);

  // Parabolic polish through three nearby samples.
  const double h = std::max(1e-6, 1e-4 * delta);
  const double fl = objective(delta - h), fr = objective(delta + h);
  const double denom = fl - 2 * f + fr;
  if (denom > 0) {
    const double candidate = delta + 0.5 * h * (fl - fr) / denom;
    if (std::abs(candidate - delta) <= h) {
      const double fc = objective(candidate);
      if (fc < f) {
        delta = candidate;
        f = fc;
      }
    }
  }
  return {delta, f, delta > kScaleHigh || delta < kScaleLow};
}

}  // namespace pdr::metrics
