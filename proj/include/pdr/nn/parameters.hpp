// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdr/nn/tensor.hpp"

namespace pdr::nn {

// Ordered, named collection of learnable leaves.
class ParameterStore {
 public:
  // Registers a parameter initialised uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor create(const std::string& name, Shape shape, std::size_t fan_in, std::mt19937_64& rng);
  Tensor add(const std::string& name, Tensor parameter);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& tensors() const { return params_; }
  std::vector<Tensor>& tensors() { return params_; }

  // Deep copy with fresh leaves.
  ParameterStore clone() const;
  // Copies values from a store with identical names and shapes.
  void assign(const ParameterStore& other);
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "PDRK" checkpoint: magic, u32 version, u64 count, then per parameter
// u32 name length, UTF-8 name, u32 rank, u64 dims, little-endian f64 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);
ParameterStore load_checkpoint(const std::filesystem::path& path);
// Loads into an existing store, checking names and shapes.
void load_checkpoint_into(const std::filesystem::path& path, ParameterStore& params);

}  // namespace pdr::nn
