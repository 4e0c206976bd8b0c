// SPDX-License-Identifier: Apache-2.0
#include "pdr/geometry/neighbors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "pdr/error.hpp"
#include "pdr/nn/ops.hpp"

namespace pdr::geometry {

std::size_t NeighborTable::real_count(std::size_t center) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < k; ++j) n += real[center * k + j];
  return n;
}

std::size_t NeighborTable::total_real() const {
  return static_cast<std::size_t>(std::count(real.begin(), real.end(), std::uint8_t{1}));
}

CompactNeighbors compact(const NeighborTable& table) {
  CompactNeighbors out;
  out.offsets.reserve(table.center_count + 1);
  out.offsets.push_back(0);
  for (std::size_t i = 0; i < table.center_count; ++i) {
    for (std::size_t j = 0; j < table.k; ++j) {
      if (table.is_dummy(i, j)) continue;
      out.sources.push_back(table.index(i, j));
      out.centers.push_back(i);
    }
    out.offsets.push_back(out.sources.size());
  }
  return out;
}

namespace {

struct Candidate {
  double d2;
  std::size_t index;
};

// Order independent of the source array's permutation for distinct points.
auto canonical_less(std::span<const Vec3> sources) {
  return [sources](const Candidate& a, const Candidate& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (sources[a.index] != sources[b.index]) return sources[a.index] < sources[b.index];
    return a.index < b.index;
  };
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Subsampling stream for one center, keyed by its coordinates so the choice
// does not depend on where the center sits in the query order.
std::uint64_t center_key(std::uint64_t base, const Vec3& c) {
  std::uint64_t h = base;
  for (double v : c) h = mix(h ^ std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  return h;
}

}  // namespace

NeighborTable ball_query(std::span<const Vec3> sources, std::span<const Vec3> centers, double radius,
                         std::size_t k, std::mt19937_64& rng) {
  if (!(radius > 0)) throw ArgumentError("ball_query: radius must be positive");
  if (k == 0) throw ArgumentError("ball_query: k must be positive");
  if (sources.empty()) throw ArgumentError("ball_query: no source points");
  NeighborTable table;
  table.center_count = centers.size();
  table.k = k;
  table.indices.assign(centers.size() * k, -1);
  table.real.assign(centers.size() * k, 0);

  const double r2 = radius * radius;
  const std::uint64_t base = rng();
  const auto less = canonical_less(sources);
  std::vector<Candidate> found;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    found.clear();
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const double d2 = squared_distance(sources[s], centers[c]);
      if (d2 <= r2) found.push_back({d2, s});
    }
    std::sort(found.begin(), found.end(), less);
    if (found.size() > k) {
      // Partial Fisher-Yates: the first k entries become a uniform k-subset.
      std::mt19937_64 local(center_key(base, centers[c]));
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, found.size() - 1);
        std::swap(found[i], found[pick(local)]);
      }
      found.resize(k);
      std::sort(found.begin(), found.end(), less);
    }
    for (std::size_t j = 0; j < found.size(); ++j) {
      table.indices[c * k + j] = static_cast<std::int64_t>(found[j].index);
      table.real[c * k + j] = 1;
    }
  }
  return table;
}

NeighborTable knn_query(std::span<const Vec3> sources, std::span<const Vec3> centers, std::size_t k) {
  if (k == 0 || k > sources.size()) {
    throw ArgumentError("knn_query: k = " + std::to_string(k) + " with " + std::to_string(sources.size()) +
                        " sources");
  }
  NeighborTable table;
  table.center_count = centers.size();
  table.k = k;
  table.indices.resize(centers.size() * k);
  table.real.assign(centers.size() * k, 1);
  std::vector<Candidate> all(sources.size());
  const auto by_distance = canonical_less(sources);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t s = 0; s < sources.size(); ++s) all[s] = {squared_distance(sources[s], centers[c]), s};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_distance);
    for (std::size_t j = 0; j < k; ++j) table.indices[c * k + j] = static_cast<std::int64_t>(all[j].index);
  }
  return table;
}

std::vector<double> relative_offsets(const NeighborTable& table, std::span<const Vec3> centers,
                                     std::span<const Vec3> sources) {
  if (centers.size() != table.center_count) throw DimensionError("relative_offsets: center count mismatch");
  std::vector<double> out(table.center_count * table.k * 3, 0.0);
  for (std::size_t i = 0; i < table.center_count; ++i) {
    for (std::size_t j = 0; j < table.k; ++j) {
      if (table.is_dummy(i, j)) continue;
      const auto s = static_cast<std::size_t>(table.index(i, j));
      if (s >= sources.size()) throw std::logic_error("neighbor index out of range");
      const Vec3 d = sources[s] - centers[i];
      for (int a = 0; a < 3; ++a) out[(i * table.k + j) * 3 + a] = d[a];
    }
  }
  return out;
}

nn::Tensor group(const nn::Tensor& features, const NeighborTable& table, std::span<const Vec3> centers,
                 std::span<const Vec3> sources) {
  if (features.rank() != 2 || features.dim(0) != sources.size()) {
    throw DimensionError("group: features " + nn::shape_string(features.shape()) + " do not match " +
                         std::to_string(sources.size()) + " sources");
  }
  const std::size_t m = table.center_count, k = table.k, d = features.dim(1);
  auto gathered = nn::gather_rows(features, table.indices);
  auto offsets = nn::Tensor::constant({m * k, 3}, relative_offsets(table, centers, sources));
  return nn::reshape(nn::concat_lastdim(gathered, offsets), {m, k, d + 3});
}

std::vector<double> three_interpolate(std::span<const Vec3> coarse_positions,
                                      std::span<const double> coarse_features, std::size_t feature_dim,
                                      std::span<const Vec3> fine_positions) {
  if (coarse_positions.size() < 3) throw ArgumentError("three_interpolate: needs at least 3 coarse points");
  if (coarse_features.size() != coarse_positions.size() * feature_dim) {
    throw DimensionError("three_interpolate: coarse feature matrix size mismatch");
  }
  const auto table = knn_query(coarse_positions, fine_positions, 3);
  std::vector<double> out(fine_positions.size() * feature_dim, 0.0);
  for (std::size_t i = 0; i < fine_positions.size(); ++i) {
    double* dst = out.data() + i * feature_dim;
    const auto nearest = static_cast<std::size_t>(table.index(i, 0));
    if (squared_distance(coarse_positions[nearest], fine_positions[i]) == 0.0) {
      std::copy_n(coarse_features.data() + nearest * feature_dim, feature_dim, dst);
      continue;
    }
    double total = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto s = static_cast<std::size_t>(table.index(i, j));
      const double w = 1.0 / squared_distance(coarse_positions[s], fine_positions[i]);
      total += w;
      for (std::size_t f = 0; f < feature_dim; ++f) dst[f] += w * coarse_features[s * feature_dim + f];
    }
    for (std::size_t f = 0; f < feature_dim; ++f) dst[f] /= total;
  }
  return out;
}

}  // namespace pdr::geometry
