// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdr/geometry/point_cloud.hpp"
#include "pdr/nn/tensor.hpp"

namespace pdr::metrics {

using geometry::Vec3;

// min_b |a - b|^2 for every a.
std::vector<double> nearest_squared_distances(std::span<const Vec3> from, std::span<const Vec3> to);

// Symmetric, mean-normalised squared-distance Chamfer distance.
double chamfer(std::span<const Vec3> v, std::span<const Vec3> x);
// (1/|C|) sum_c min_x |c - x|^2
double one_sided_chamfer(std::span<const Vec3> c, std::span<const Vec3> x);

// Threshold rho applies to squared nearest-neighbour distances.
double f1_score(std::span<const Vec3> v, std::span<const Vec3> x, double rho);

inline constexpr std::size_t kExactEmdLimit = 512;

// Minimum over bijections of the summed (unsquared) Euclidean distance,
// solved exactly with the Hungarian method. Sizes must match and not exceed
// kExactEmdLimit.
double emd_exact(std::span<const Vec3> v, std::span<const Vec3> x);
// Assignment cost for a given cost matrix (row-major n x n), exact.
double hungarian_min_cost(std::span<const double> cost, std::size_t n, std::vector<std::size_t>* assignment = nullptr);

// Auction algorithm with epsilon scaling. `iterations` is the number of
// scaling phases; the best assignment seen so far is returned, so the value
// never increases with more phases and never falls below emd_exact.
double emd_approx(std::span<const Vec3> v, std::span<const Vec3> x, std::size_t iterations = 12);

// emd_exact up to the limit, emd_approx above it.
struct EmdResult {
  double value;
  bool exact;
};
EmdResult emd(std::span<const Vec3> v, std::span<const Vec3> x);

struct ScaleFit {
  double scale;
  double objective;
  bool inconsistent;  // scale outside [0.95, 1.05]
};

inline constexpr double kScaleLow = 0.95;
inline constexpr double kScaleHigh = 1.05;

// argmin_delta one_sided_chamfer(delta * C, X) over delta in [0.25, 4].
ScaleFit fit_scale(std::span<const Vec3> c, std::span<const Vec3> x);

// Differentiable losses.
// Mean squared error over all 3N noise coordinates.
nn::Tensor ddpm_loss(const nn::Tensor& true_noise, const nn::Tensor& predicted_noise);
// Chamfer distance between an [N, 3] differentiable cloud and fixed targets.
nn::Tensor chamfer_loss(const nn::Tensor& v, std::span<const Vec3> x);

// Evaluation record. Values are held in raw units; JSON output applies the
// customary x1e4 (CD) and x1e2 (per-point EMD) scaling.
struct MetricReport {
  double cd = 0;
  double emd = 0;  // per-point mean transport distance
  bool emd_exact = true;
  double f1 = 0;
  double rho = 1e-4;
  std::size_t n_points = 0;

  nlohmann::json to_json() const;
};

MetricReport evaluate_pair(std::span<const Vec3> prediction, std::span<const Vec3> truth, double rho);
// Mean of each field over a set of reports.
MetricReport aggregate(std::span<const MetricReport> reports);

}  // namespace pdr::metrics
