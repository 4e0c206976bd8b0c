// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"

namespace pdr::metrics {

namespace {

std::vector<double> distance_matrix(std::span<const Vec3> v, std::span<const Vec3> x) {
  const std::size_t n = v.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::sqrt(geometry::squared_distance(v[i], x[j]));
  return cost;
}

void require_matching(std::span<const Vec3> v, std::span<const Vec3> x, const char* op) {
  if (v.size() != x.size()) {
    throw ArgumentError(std::string(op) + ": clouds have " + std::to_string(v.size()) + " and " +
                        std::to_string(x.size()) + " points");
  }
  if (v.empty()) throw ArgumentError(std::string(op) + ": point clouds must be nonempty");
}

}  // namespace

double hungarian_min_cost(std::span<const double> cost, std::size_t n, std::vector<std::size_t>* assignment) {
  if (cost.size() != n * n) throw DimensionError("hungarian_min_cost: cost matrix is not n x n");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with row/column potentials; 1-based with a
  // virtual column 0.
  std::vector<double> u(n + 1, 0.0), w(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<std::uint8_t> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(r - 1) * n + (j - 1)] - u[r] - w[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          w[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + row_to_col[i]];
  if (assignment) *assignment = std::move(row_to_col);
  return total;
}

double emd_exact(std::span<const Vec3> v, std::span<const Vec3> x) {
  require_matching(v, x, "emd_exact");
  if (v.size() > kExactEmdLimit) {
    throw ArgumentError("emd_exact: " + std::to_string(v.size()) + " points exceeds the exact-solver limit of " +
                        std::to_string(kExactEmdLimit) + "; use emd_approx");
  }
  return hungarian_min_cost(distance_matrix(v, x), v.size());
}

double emd_approx(std::span<const Vec3> v, std::span<const Vec3> x, std::size_t iterations) {
  require_matching(v, x, "emd_approx");
  if (iterations == 0) throw ArgumentError("emd_approx: need at least one scaling phase");
  const std::size_t n = v.size();
  const auto cost = distance_matrix(v, x);
  const double max_cost = *std::max_element(cost.begin(), cost.end());
  if (max_cost == 0) return 0.0;

  constexpr std::size_t unassigned = static_cast<std::size_t>(-1);
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n), assigned(n);
  double best = std::numeric_limits<double>::infinity();
  double eps = max_cost / 4;
  std::vector<std::size_t> queue;
  for (std::size_t phase = 0; phase < iterations; ++phase, eps /= 5) {
    std::fill(owner.begin(), owner.end(), unassigned);
    std::fill(assigned.begin(), assigned.end(), unassigned);
    queue.resize(n);
    for (std::size_t i = 0; i < n; ++i) queue[i] = n - 1 - i;
    while (!queue.empty()) {
      const std::size_t person = queue.back();
      queue.pop_back();
      // Maximise benefit -cost - price.
      double top = -std::numeric_limits<double>::infinity(), second = top;
      std::size_t pick = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -cost[person * n + j] - price[j];
        if (value > top) {
          second = top;
          top = value;
          pick = j;
        } else if (value > second) {
          second = value;
        }
      }
      if (n == 1) second = top;
      price[pick] += top - second + eps;
      if (owner[pick] != unassigned) {
        assigned[owner[pick]] = unassigned;
        queue.push_back(owner[pick]);
      }
      owner[pick] = person;
      assigned[person] = pick;
    }
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assigned[i]];
    best = std::min(best, total);
  }
  return best;
}

EmdResult emd(std::span<const Vec3> v, std::span<const Vec3> x) {
  if (v.size() <= kExactEmdLimit) return {emd_exact(v, x), true};
  return {emd_approx(v, x), false};
}

}  // namespace pdr::metrics
