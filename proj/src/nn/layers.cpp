// SPDX-License-Identifier: Apache-2.0
#include "pdr/nn/layers.hpp"

namespace pdr::nn {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) {
  Linear l;
  l.weight = store.create(name + ".weight", {in, out}, in, rng);
  l.bias = store.create(name + ".bias", {out}, in, rng);
  return l;
}

Linear Linear::bind(const ParameterStore& store, const std::string& name) {
  return {store.get(name + ".weight"), store.get(name + ".bias")};
}

}  // namespace pdr::nn
