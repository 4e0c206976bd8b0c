// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>

#include "pdr/error.hpp"
#include "pdr/geometry/neighbors.hpp"

namespace pdr::geometry {

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m) {
  const std::size_t n = points.size();
  if (m == 0 || m > n) {
    throw ArgumentError("farthest_point_sample: requested " + std::to_string(m) + " of " + std::to_string(n) +
                        " points");
  }
  std::size_t seed = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (points[i] < points[seed]) seed = i;  // lexicographic, strict keeps the lower index

  std::vector<std::size_t> selected;
  selected.reserve(m);
  selected.push_back(seed);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> taken(n, 0);
  taken[seed] = 1;
  std::size_t last = seed;
  while (selected.size() < m) {
    std::size_t best = n;
    double best_d = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], squared_distance(points[i], points[last]));
      // Ties (common in mirrored clouds) go to the lexicographically smaller point.
      if (nearest[i] > best_d || (nearest[i] == best_d && points[i] < points[best])) {
        best_d = nearest[i];
        best = i;
      }
    }
    taken[best] = 1;
    selected.push_back(best);
    last = best;
  }
  return selected;
}

}  // namespace pdr::geometry
