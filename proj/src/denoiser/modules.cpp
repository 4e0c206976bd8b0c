// SPDX-License-Identifier: Apache-2.0
#include "pdr/denoiser/modules.hpp"

#include <cmath>

#include "pdr/error.hpp"

namespace pdr::denoiser {

using geometry::operator-;

namespace {

std::vector<std::int64_t> as_index(const std::vector<std::size_t>& idx) {
  return {idx.begin(), idx.end()};
}

std::vector<Vec3> pick(std::span<const Vec3> points, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

void require_width(const char* module, std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw ConfigError(std::string(module) + ": expected feature width " + std::to_string(expected) + ", got " +
                      std::to_string(got));
  }
}

}  // namespace

nn::Tensor positions_matrix(std::span<const Vec3> positions) {
  std::vector<double> v;
  v.reserve(positions.size() * 3);
  for (const auto& p : positions) v.insert(v.end(), p.begin(), p.end());
  return nn::Tensor::constant({positions.size(), 3}, std::move(v));
}

nn::Tensor append_positions(const nn::Tensor& features, std::span<const Vec3> positions) {
  return nn::concat_lastdim(features, positions_matrix(positions));
}

// ---- SharedMlp

SharedMlp SharedMlp::create(nn::ParameterStore& store, const std::string& name, std::vector<std::size_t> widths,
                            std::size_t context_dim, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ConfigError("SharedMlp '" + name + "' needs at least one layer");
  SharedMlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.layers_.push_back(nn::Linear::create(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng));
  }
  if (context_dim > 0) {
    for (std::size_t i = 0; i + 2 < widths.size(); ++i) {
      mlp.projections_.push_back(
          nn::Linear::create(store, name + ".inject" + std::to_string(i), context_dim, widths[i + 1], rng));
    }
  }
  return mlp;
}

nn::Tensor SharedMlp::inject(const nn::Tensor& h, std::size_t layer, const nn::Tensor& context) const {
  if (!context.defined() || layer >= projections_.size()) return h;
  const auto& proj = projections_[layer];
  const auto row = proj(nn::reshape(context, {1, context.numel()}));
  return nn::bias_add(h, nn::reshape(row, {proj.out_features()}));
}

nn::Tensor SharedMlp::from_first_preactivation(const nn::Tensor& h, const nn::Tensor& context) const {
  auto x = nn::swish(inject(h, 0, context));
  for (std::size_t i = 1; i < layers_.size(); ++i) x = nn::swish(inject(layers_[i](x), i, context));
  return x;
}

nn::Tensor SharedMlp::operator()(const nn::Tensor& x, const nn::Tensor& context) const {
  return from_first_preactivation(layers_.front()(x), context);
}

// ---- Attention

Attention Attention::create(nn::ParameterStore& store, const std::string& name, std::size_t query_in,
                            std::size_t key_in, std::size_t value_dim, std::size_t query_dim, std::size_t key_dim,
                            std::mt19937_64& rng) {
  Attention a;
  a.query_ = nn::Linear::create(store, name + ".query", query_in, query_dim, rng);
  a.key_ = nn::Linear::create(store, name + ".key", key_in, key_dim, rng);
  a.score_hidden_ = nn::Linear::create(store, name + ".score0", query_dim + key_dim, value_dim, rng);
  a.score_out_ = nn::Linear::create(store, name + ".score1", value_dim, value_dim, rng);
  return a;
}

nn::Tensor Attention::scores(const nn::Tensor& q_rows, const nn::Tensor& k_rows) const {
  return score_out_(nn::swish(score_hidden_(nn::concat_lastdim(q_rows, k_rows))));
}

nn::Tensor Attention::dense(const nn::Tensor& g_in, const nn::Tensor& g_out, const nn::Tensor& queries,
                            std::span<const std::uint8_t> real_mask, AttentionTrace* trace) const {
  if (g_in.rank() != 3 || g_out.rank() != 3 || queries.rank() != 2) {
    throw DimensionError("attention: expected [m, k, d] keys and values with [m, d] queries");
  }
  const std::size_t m = g_in.dim(0), k = g_in.dim(1);
  if (g_out.dim(0) != m || g_out.dim(1) != k || queries.dim(0) != m || real_mask.size() != m * k) {
    throw DimensionError("attention: inconsistent center or slot counts");
  }
  const auto q = nn::repeat_neighbors(nn::swish(query_(queries)), k);
  const auto keys = nn::swish(key_(g_in));
  const auto w = nn::neighbor_softmax(scores(q, keys), real_mask);
  if (trace) {
    trace->weights = w;
    trace->real.assign(real_mask.begin(), real_mask.end());
    trace->k = k;
  }
  return nn::weighted_sum(g_out, w);
}

nn::Tensor Attention::ragged(const nn::Tensor& key_pre, const nn::Tensor& values, const nn::Tensor& queries,
                             std::span<const std::size_t> offsets) const {
  // The query half of the score layer is applied once per center, then repeated over its rows.
  const auto& hidden = score_hidden_;
  const std::size_t dq = query_.out_features();
  const auto from_query = nn::matmul(nn::swish(query_(queries)), nn::slice_rows(hidden.weight, 0, dq));
  const auto from_key = nn::matmul(nn::swish(key_pre), nn::slice_rows(hidden.weight, dq, hidden.in_features()));
  const auto h = nn::bias_add(nn::add(nn::repeat_segments(from_query, offsets), from_key), hidden.bias);
  const auto w = nn::segment_softmax(score_out_(nn::swish(h)), offsets);
  return nn::segment_weighted_sum(values, w, offsets);
}

// ---- grouping helpers

Grouping make_grouping(geometry::NeighborTable table, std::span<const Vec3> centers,
                       std::span<const Vec3> sources) {
  Grouping g;
  g.rows = geometry::compact(table);
  g.table = std::move(table);
  if (!g.rows.sources.empty()) {
    std::vector<double> off;
    off.reserve(g.rows.sources.size() * 3);
    for (std::size_t r = 0; r < g.rows.sources.size(); ++r) {
      const Vec3 d = sources[static_cast<std::size_t>(g.rows.sources[r])] - centers[g.rows.centers[r]];
      off.insert(off.end(), d.begin(), d.end());
    }
    g.offsets = nn::Tensor::constant({g.rows.sources.size(), 3}, std::move(off));
  }
  return g;
}

nn::Tensor grouped_linear(const nn::Linear& layer, const nn::Tensor& features, const Grouping& grouping) {
  const std::size_t d = features.dim(1);
  require_width("grouped_linear", layer.in_features(), d + 3);
  const auto wf = nn::slice_rows(layer.weight, 0, d);
  const auto wp = nn::slice_rows(layer.weight, d, d + 3);
  const auto from_features = nn::gather_rows(nn::matmul(features, wf), grouping.rows.sources);
  return nn::bias_add(nn::add(from_features, nn::matmul(grouping.offsets, wp)), layer.bias);
}

namespace {

// Shared aggregation path of SA and FT. Dense when tracing, ragged otherwise.
nn::Tensor aggregate(const SharedMlp& mlp, const Attention& attention, const nn::Tensor& features,
                     std::span<const Vec3> sources, std::span<const Vec3> centers,
                     geometry::NeighborTable table, const nn::Tensor& queries, const nn::Tensor& context,
                     AttentionTrace* trace) {
  if (trace) {
    const auto g_in = geometry::group(features, table, centers, sources);
    const auto g_out = mlp(g_in, context);
    return attention.dense(g_in, g_out, queries, table.real, trace);
  }
  const auto g = make_grouping(std::move(table), centers, sources);
  if (g.rows.sources.empty()) return nn::Tensor::zeros({centers.size(), mlp.out_dim()});
  const auto values = mlp.from_first_preactivation(grouped_linear(mlp.first(), features, g), context);
  const auto key_pre = grouped_linear(attention.key_layer(), features, g);
  return attention.ragged(key_pre, values, queries, g.rows.offsets);
}

}  // namespace

// ---- SetAbstraction

SetAbstraction SetAbstraction::create(nn::ParameterStore& store, const std::string& name, std::size_t in_dim,
                                      std::size_t out_dim, std::size_t context_dim, double radius, std::size_t k,
                                      std::uint64_t seed, const DenoiserConfig& config, std::mt19937_64& rng) {
  SetAbstraction sa;
  sa.in_dim_ = in_dim;
  sa.radius_ = radius;
  sa.k_ = k;
  sa.seed_ = seed;
  sa.mlp_ = SharedMlp::create(store, name + ".mlp", {in_dim + 3, out_dim, out_dim}, context_dim, rng);
  sa.attention_ =
      Attention::create(store, name + ".attn", in_dim, in_dim + 3, out_dim, config.query_dim, config.key_dim, rng);
  return sa;
}

LevelFeatures SetAbstraction::operator()(const LevelFeatures& in, std::size_t out_count, const nn::Tensor& context,
                                         AttentionTrace* trace) const {
  require_width("set abstraction", in_dim_, in.dim());
  const auto idx = geometry::farthest_point_sample(in.positions, out_count);
  auto centers = pick(in.positions, idx);
  std::mt19937_64 rng(seed_);
  auto table = geometry::ball_query(in.positions, centers, radius_, k_, rng);
  const auto queries = nn::gather_rows(in.features, as_index(idx));
  const auto out = aggregate(mlp_, attention_, in.features, in.positions, centers, std::move(table), queries,
                             context, trace);
  auto features = append_positions(out, centers);
  return {std::move(centers), std::move(features)};
}

// ---- FeatureTransfer

FeatureTransfer FeatureTransfer::create(nn::ParameterStore& store, const std::string& name,
                                        std::size_t condition_dim, std::size_t query_dim_in, std::size_t out_dim,
                                        double radius, std::size_t k, std::uint64_t seed,
                                        const DenoiserConfig& config, std::mt19937_64& rng) {
  FeatureTransfer ft;
  ft.condition_dim_ = condition_dim;
  ft.radius_ = radius;
  ft.k_ = k;
  ft.seed_ = seed;
  ft.mlp_ = SharedMlp::create(store, name + ".mlp", {condition_dim + 3, out_dim, out_dim}, 0, rng);
  ft.attention_ = Attention::create(store, name + ".attn", query_dim_in, condition_dim + 3, out_dim,
                                    config.query_dim, config.key_dim, rng);
  return ft;
}

nn::Tensor FeatureTransfer::operator()(const LevelFeatures& condition, std::span<const Vec3> positions,
                                       const nn::Tensor& queries, AttentionTrace* trace) const {
  require_width("feature transfer", condition_dim_, condition.dim());
  std::mt19937_64 rng(seed_);
  auto table = geometry::ball_query(condition.positions, positions, radius_, k_, rng);
  return aggregate(mlp_, attention_, condition.features, condition.positions, positions, std::move(table), queries,
                   nn::Tensor{}, trace);
}

// ---- FeaturePropagation

FeaturePropagation FeaturePropagation::create(nn::ParameterStore& store, const std::string& name,
                                              std::size_t coarse_dim, std::size_t skip_dim, std::size_t out_dim,
                                              std::size_t context_dim, std::size_t k, const DenoiserConfig& config,
                                              std::mt19937_64& rng) {
  FeaturePropagation fp;
  fp.coarse_dim_ = coarse_dim;
  fp.k_ = k;
  fp.mlp_ = SharedMlp::create(store, name + ".mlp", {coarse_dim + 3, out_dim, out_dim}, context_dim, rng);
  fp.attention_ = Attention::create(store, name + ".attn", skip_dim, coarse_dim + 3, out_dim, config.query_dim,
                                    config.key_dim, rng);
  fp.unit_ = SharedMlp::create(store, name + ".unit", {out_dim + skip_dim, out_dim, out_dim}, 0, rng);
  return fp;
}

nn::Tensor FeaturePropagation::operator()(const LevelFeatures& coarse, std::span<const Vec3> fine_positions,
                                          const nn::Tensor& skip, const nn::Tensor& context,
                                          AttentionTrace* trace) const {
  require_width("feature propagation", coarse_dim_, coarse.dim());
  if (skip.dim(0) != fine_positions.size()) throw DimensionError("feature propagation: skip rows mismatch");
  auto table = geometry::knn_query(coarse.positions, fine_positions, std::min(k_, coarse.size()));
  const auto out = aggregate(mlp_, attention_, coarse.features, coarse.positions, fine_positions, std::move(table),
                             skip, context, trace);
  return append_positions(unit_(nn::concat_lastdim(out, skip), nn::Tensor{}), fine_positions);
}

// ---- step and global encoders

std::vector<double> raw_step_encoding(std::size_t t, std::size_t d_t, StepEncoding encoding) {
  const double sign = encoding == StepEncoding::increasing ? 1.0 : -1.0;
  std::vector<double> out(2 * d_t);
  for (std::size_t i = 0; i < d_t; ++i) {
    const double psi =
        std::pow(10.0, sign * 4.0 * static_cast<double>(i) / static_cast<double>(d_t)) * static_cast<double>(t);
    out[i] = std::sin(psi);
    out[d_t + i] = std::cos(psi);
  }
  return out;
}

StepEncoder StepEncoder::create(nn::ParameterStore& store, const std::string& name, const DenoiserConfig& config,
                                std::mt19937_64& rng) {
  StepEncoder e;
  e.d_t_ = config.pos_encode_dim;
  e.encoding_ = config.step_encoding;
  e.fc1_ = nn::Linear::create(store, name + ".fc0", 2 * e.d_t_, config.step_embed_dim, rng);
  e.fc2_ = nn::Linear::create(store, name + ".fc1", config.step_embed_dim, config.step_embed_dim, rng);
  return e;
}

nn::Tensor StepEncoder::operator()(std::size_t t) const {
  if (t == 0) throw ArgumentError("step encoder: steps are 1-based");
  const auto x = nn::Tensor::constant({1, 2 * d_t_}, raw_step_encoding(t, d_t_, encoding_));
  const auto h = nn::swish(fc2_(nn::swish(fc1_(x))));
  return nn::reshape(h, {fc2_.out_features()});
}

GlobalEncoder GlobalEncoder::create(nn::ParameterStore& store, const std::string& name, std::size_t in_dim,
                                    const DenoiserConfig& config, std::mt19937_64& rng) {
  GlobalEncoder g;
  std::vector<std::size_t> widths{in_dim};
  widths.insert(widths.end(), config.global_stage1.begin(), config.global_stage1.end());
  g.stage1_ = SharedMlp::create(store, name + ".stage1", widths, 0, rng);
  const std::size_t w1 = widths.back();
  g.stage2_hidden_ = nn::Linear::create(store, name + ".stage2.0", 2 * w1, config.global_stage2_hidden, rng);
  g.stage2_out_ =
      nn::Linear::create(store, name + ".stage2.1", config.global_stage2_hidden, config.global_feature_dim, rng);
  return g;
}

nn::Tensor GlobalEncoder::operator()(const nn::Tensor& points) const {
  const auto h1 = stage1_(points, nn::Tensor{});
  const auto pooled = nn::tile_rows(nn::max_rows(h1), points.dim(0));
  const auto h2 = stage2_out_(nn::swish(stage2_hidden_(nn::concat_lastdim(h1, pooled))));
  return nn::max_rows(h2);
}

}  // namespace pdr::denoiser
