// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"

namespace pdr::metrics {

namespace {
void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b, const char* op) {
  if (a.empty() || b.empty()) throw ArgumentError(std::string(op) + ": point clouds must be nonempty");
}

double mean_of(const std::vector<double>& v) {
  double total = 0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}
}  // namespace

std::vector<double> nearest_squared_distances(std::span<const Vec3> from, std::span<const Vec3> to) {
  std::vector<double> out(from.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < from.size(); ++i)
    for (const auto& q : to) out[i] = std::min(out[i], geometry::squared_distance(from[i], q));
  return out;
}

double chamfer(std::span<const Vec3> v, std::span<const Vec3> x) {
  require_nonempty(v, x, "chamfer");
  return mean_of(nearest_squared_distances(v, x)) + mean_of(nearest_squared_distances(x, v));
}

double one_sided_chamfer(std::span<const Vec3> c, std::span<const Vec3> x) {
  require_nonempty(c, x, "one_sided_chamfer");
  return mean_of(nearest_squared_distances(c, x));
}

double f1_score(std::span<const Vec3> v, std::span<const Vec3> x, double rho) {
  require_nonempty(v, x, "f1_score");
  if (!(rho > 0)) throw ArgumentError("f1_score: threshold must be positive");
  const auto fraction_within = [rho](const std::vector<double>& d) {
    std::size_t hits = 0;
    for (double e : d) hits += e < rho;
    return static_cast<double>(hits) / static_cast<double>(d.size());
  };
  const double precision = fraction_within(nearest_squared_distances(v, x));
  const double recall = fraction_within(nearest_squared_distances(x, v));
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

}  // namespace pdr::metrics
