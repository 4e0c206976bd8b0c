// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "pdr/data/dataset.hpp"
#include "pdr/denoiser/network.hpp"
#include "pdr/schedule/schedule.hpp"

namespace pdr::harness {

using geometry::Vec3;

// eps_hat for a noisy cloud at diffusion step t.
using NoisePredictor = std::function<std::vector<Vec3>(std::span<const Vec3> x_t, std::size_t t)>;

// Reverse process from x_T ~ N(0, I) along `plan`. Each plan position makes
// exactly one predictor call; `calls` counts them when given.
std::vector<Vec3> reverse_sample(const NoisePredictor& predictor, std::size_t n_points,
                                 const schedule::AcceleratedSchedule& plan, std::mt19937_64& rng,
                                 std::atomic<std::size_t>* calls = nullptr);
// Same, starting from a given x_T.
std::vector<Vec3> reverse_sample_from(const NoisePredictor& predictor, std::vector<Vec3> x_T,
                                      const schedule::AcceleratedSchedule& plan, std::mt19937_64& rng,
                                      std::atomic<std::size_t>* calls = nullptr);

// Coarse completion of one partial cloud with a CGNet.
std::vector<Vec3> generate_coarse(const denoiser::Denoiser& cgnet, const geometry::PointCloud& partial,
                                  std::size_t n_points, const schedule::AcceleratedSchedule& plan,
                                  std::mt19937_64& rng, std::atomic<std::size_t>* calls = nullptr);

// RFNet output v for a coarse cloud.
std::vector<Vec3> refine(const denoiser::Denoiser& rfnet, std::span<const Vec3> coarse,
                         const geometry::PointCloud& partial);

// Fills pair.coarse with k completions per pair. Pair i uses its own stream
// derived from seed and i, so results do not depend on the thread count.
void cache_coarse(const denoiser::Denoiser& cgnet, std::vector<data::DatasetPair>& pairs, std::size_t k,
                  std::size_t n_points, const schedule::AcceleratedSchedule& plan, std::uint64_t seed,
                  std::size_t threads);

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace pdr::harness
