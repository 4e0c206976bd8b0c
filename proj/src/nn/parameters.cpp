// SPDX-License-Identifier: Apache-2.0
#include "pdr/nn/parameters.hpp"

#include <cmath>

#include "pdr/binary_io.hpp"
#include "pdr/error.hpp"

namespace pdr::nn {

namespace {
constexpr std::string_view kMagic = "PDRK";
}

Tensor ParameterStore::create(const std::string& name, Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  if (fan_in == 0) throw ConfigError("parameter " + name + ": fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(element_count(shape));
  for (auto& v : values) v = dist(rng);
  return add(name, Tensor::parameter(std::move(shape), std::move(values)));
}

Tensor ParameterStore::add(const std::string& name, Tensor parameter) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name " + name);
  if (!parameter.requires_grad() || !parameter.is_leaf()) {
    throw ConfigError("parameter " + name + " must be a gradient-carrying leaf");
  }
  index_.emplace(name, params_.size());
  names_.push_back(name);
  params_.push_back(parameter);
  return parameter;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto v = params_[i].values();
    out.add(names_[i], Tensor::parameter(params_[i].shape(), std::vector<double>(v.begin(), v.end())));
  }
  return out;
}

void ParameterStore::assign(const ParameterStore& other) {
  if (other.names_ != names_) throw ConfigError("parameter stores have different layouts");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].shape() != other.params_[i].shape()) {
      throw ConfigError("parameter " + names_[i] + ": shape " + shape_string(other.params_[i].shape()) +
                        " does not match " + shape_string(params_[i].shape()));
    }
    const auto src = other.params_[i].values();
    std::copy(src.begin(), src.end(), params_[i].mutable_values().begin());
  }
}

bool ParameterStore::all_finite() const {
  for (const auto& p : params_)
    for (double v : p.values())
      if (!std::isfinite(v)) return false;
  return true;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  io::Writer w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    const auto& t = params.tensors()[i];
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint64_t>(d);
    const auto v = t.values();
    w.put_array(std::vector<double>(v.begin(), v.end()));
  }
  w.write_to(path);
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  io::Reader r(path);
  if (r.get_bytes(kMagic.size()) != kMagic) r.fail_format("bad checkpoint magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail_format("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  ParameterStore out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    auto name = r.get_bytes(name_len);
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    if (rank == 0 || element_count(shape) == 0) r.fail_format("empty tensor " + name);
    auto data = r.get_array<double>(element_count(shape));
    out.add(name, Tensor::parameter(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) r.fail_format("trailing bytes after checkpoint");
  return out;
}

void load_checkpoint_into(const std::filesystem::path& path, ParameterStore& params) {
  params.assign(load_checkpoint(path));
}

}  // namespace pdr::nn
