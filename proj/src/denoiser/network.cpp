// SPDX-License-Identifier: Apache-2.0
#include "pdr/denoiser/network.hpp"

#include <random>

#include "pdr/error.hpp"

namespace pdr::denoiser {

namespace {

std::uint64_t module_seed(std::uint64_t base, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(id)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

AttentionTrace* next_trace(ForwardTrace* trace) { return trace ? &trace->emplace_back() : nullptr; }

}  // namespace

Denoiser::Denoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto& c = config_;
  const std::size_t L = c.levels();
  std::mt19937_64 rng(seed);
  const std::size_t context_dim = (c.use_step_embedding ? c.step_embed_dim : 0) + c.global_feature_dim;

  if (c.use_step_embedding) step_ = StepEncoder::create(params_, "step", c, rng);
  global_ = GlobalEncoder::create(params_, "global", c.condition_input_dim + 3, c, rng);

  std::vector<std::size_t> cond_dim{c.condition_input_dim + 3};
  for (std::size_t l = 0; l < L; ++l) {
    condition_sa_.push_back(SetAbstraction::create(params_, "cond.sa" + std::to_string(l), cond_dim[l],
                                                   c.condition_dims[l], 0, c.sa_radii[l], c.k_sa,
                                                   module_seed(c.neighbor_seed, 100 + l), c, rng));
    cond_dim.push_back(c.condition_dims[l] + 3);
  }

  std::size_t f = 3;
  std::vector<std::size_t> skip_dim;
  for (std::size_t l = 0; l <= L; ++l) {
    transfer_.push_back(FeatureTransfer::create(params_, "ft" + std::to_string(l), cond_dim[l], f,
                                                c.transfer_dims[l], c.ft_radii[l], c.k_ft,
                                                module_seed(c.neighbor_seed, 300 + l), c, rng));
    skip_dim.push_back(f + c.transfer_dims[l]);
    if (l < L) {
      denoise_sa_.push_back(SetAbstraction::create(params_, "den.sa" + std::to_string(l), skip_dim[l],
                                                   c.feature_dims[l], context_dim, c.sa_radii[l], c.k_sa,
                                                   module_seed(c.neighbor_seed, 200 + l), c, rng));
      f = c.feature_dims[l] + 3;
    }
  }

  std::size_t d = skip_dim[L];
  propagation_.resize(L);
  transfer_.resize(2 * L + 1);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t l = L - 1 - step;
    const std::size_t j = 2 * L - l;
    propagation_[l] = FeaturePropagation::create(params_, "den.fp" + std::to_string(l), d, skip_dim[l],
                                                 c.decoder_dims[l], context_dim, c.k_fp, c, rng);
    const std::size_t u = c.decoder_dims[l] + 3;
    transfer_[j] = FeatureTransfer::create(params_, "ft" + std::to_string(j), cond_dim[l], u, c.transfer_dims[j],
                                           c.ft_radii[j], c.k_ft, module_seed(c.neighbor_seed, 300 + j), c, rng);
    d = u + c.transfer_dims[j];
  }
  head_hidden_ = nn::Linear::create(params_, "head.0", d, c.head_hidden, rng);
  head_out_ = nn::Linear::create(params_, "head.1", c.head_hidden, c.output_dim(), rng);
}

ConditionEncoding Denoiser::encode_condition(const geometry::PointCloud& c) const {
  c.validate();
  const std::size_t n = c.size(), extra = config_.condition_input_dim;
  std::vector<double> rows;
  rows.reserve(n * (extra + 3));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < extra; ++e) rows.push_back(e == 0 && c.has_labels() ? c.labels[i] : 0.0);
    rows.insert(rows.end(), c.points[i].begin(), c.points[i].end());
  }
  ConditionEncoding out;
  out.levels.push_back({c.points, nn::Tensor::constant({n, extra + 3}, std::move(rows))});
  out.global = global_(out.levels.front().features);
  for (std::size_t l = 0; l < condition_sa_.size(); ++l) {
    const auto count = level_point_count(config_.condition_points, l + 1, n);
    out.levels.push_back(condition_sa_[l](out.levels.back(), count, nn::Tensor{}));
  }
  return out;
}

nn::Tensor Denoiser::forward(std::span<const Vec3> x, const ConditionEncoding& condition,
                             std::optional<std::size_t> t, ForwardTrace* trace) const {
  const std::size_t L = config_.levels();
  if (x.empty()) throw ArgumentError("denoiser: empty input cloud");
  if (condition.levels.size() != L + 1) throw ConfigError("denoiser: condition encoding has the wrong depth");
  nn::Tensor context = condition.global;
  if (step_) {
    if (!t) throw ArgumentError("denoiser: CGNet forward needs a diffusion step");
    context = nn::concat_lastdim((*step_)(*t), condition.global);
  }

  std::vector<Vec3> positions(x.begin(), x.end());
  LevelFeatures level{positions, positions_matrix(positions)};
  std::vector<LevelFeatures> skips;
  for (std::size_t l = 0; l <= L; ++l) {
    const auto transferred = transfer_[l](condition.levels[l], level.positions, level.features, next_trace(trace));
    skips.push_back({level.positions, nn::concat_lastdim(level.features, transferred)});
    if (l < L) {
      const auto count = level_point_count(config_.denoise_points, l + 1, x.size());
      level = denoise_sa_[l](skips.back(), count, context, next_trace(trace));
    }
  }

  LevelFeatures decoded = skips[L];
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t l = L - 1 - step;
    const auto& skip = skips[l];
    const auto up = propagation_[l](decoded, skip.positions, skip.features, context, next_trace(trace));
    const auto transferred = transfer_[2 * L - l](condition.levels[l], skip.positions, up, next_trace(trace));
    decoded = {skip.positions, nn::concat_lastdim(up, transferred)};
  }
  return head_out_(nn::swish(head_hidden_(decoded.features)));
}

nn::Tensor cgnet_forward(const Denoiser& net, const geometry::PointCloud& x_t, const geometry::PointCloud& c,
                         std::size_t t) {
  if (!net.config().use_step_embedding) throw ConfigError("cgnet_forward: network has no step embedding");
  x_t.validate();
  return net.forward(x_t.points, net.encode_condition(c), t);
}

Refinement rfnet_forward(const Denoiser& net, std::span<const Vec3> u, const ConditionEncoding& condition) {
  const auto& config = net.config();
  if (config.use_step_embedding) throw ConfigError("rfnet_forward: network uses a step embedding");
  if (config.upsample_factor == 0) throw ConfigError("rfnet_forward: upsample factor must be >= 1");
  const std::size_t n = u.size(), lambda = config.upsample_factor;
  const double gamma = config.displacement_scale;

  Refinement r;
  r.head = net.forward(u, condition, std::nullopt);
  r.refined = nn::add(positions_matrix(u), nn::scale(nn::slice_lastdim(r.head, 0, 3), gamma));
  const auto offsets = nn::reshape(nn::slice_lastdim(r.head, 3, 3 + 3 * lambda), {n * lambda, 3});
  const auto centers = nn::reshape(nn::repeat_neighbors(r.refined, lambda), {n * lambda, 3});
  r.dense = nn::add(centers, nn::scale(offsets, gamma));
  return r;
}

Refinement rfnet_forward(const Denoiser& net, const geometry::PointCloud& u, const geometry::PointCloud& c) {
  u.validate();
  return rfnet_forward(net, u.points, net.encode_condition(c));
}

}  // namespace pdr::denoiser
