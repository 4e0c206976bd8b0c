// SPDX-License-Identifier: Apache-2.0
#include "pdr/error.hpp"
#include "pdr/metrics/metrics.hpp"

namespace pdr::metrics {

nlohmann::json MetricReport::to_json() const {
  return {{"cd", cd * 1e4},
          {"emd", emd * 1e2},
          {"f1", f1},
          {"rho", rho},
          {"n_points", n_points},
          {"emd_method", emd_exact ? "exact" : "approx"},
          {"cd_raw", cd},
          {"emd_raw", emd}};
}

MetricReport evaluate_pair(std::span<const Vec3> prediction, std::span<const Vec3> truth, double rho) {
  MetricReport r;
  r.cd = chamfer(prediction, truth);
  r.f1 = f1_score(prediction, truth, rho);
  r.rho = rho;
  r.n_points = prediction.size();
  if (prediction.size() == truth.size()) {
    const auto e = emd(prediction, truth);
    r.emd = e.value / static_cast<double>(prediction.size());
    r.emd_exact = e.exact;
  } else {
    throw ArgumentError("evaluate_pair: EMD needs equal point counts, got " + std::to_string(prediction.size()) +
                        " and " + std::to_string(truth.size()));
  }
  return r;
}

MetricReport aggregate(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ArgumentError("aggregate: no reports");
  MetricReport out;
  out.rho = reports.front().rho;
  out.n_points = reports.front().n_points;
  out.emd_exact = true;
  for (const auto& r : reports) {
    out.cd += r.cd;
    out.emd += r.emd;
    out.f1 += r.f1;
    out.emd_exact = out.emd_exact && r.emd_exact;
  }
  const double n = static_cast<double>(reports.size());
  out.cd /= n;
  out.emd /= n;
  out.f1 /= n;
  return out;
}

}  // namespace pdr::metrics
