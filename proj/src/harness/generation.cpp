// SPDX-License-Identifier: Apache-2.0
#include "pdr/harness/generation.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "pdr/error.hpp"
#include "pdr/harness/manifest.hpp"

namespace pdr::harness {

namespace {

std::vector<Vec3> rows_to_points(const nn::Tensor& t) {
  const auto v = t.values();
  std::vector<Vec3> out(t.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
  return out;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Vec3> reverse_sample_from(const NoisePredictor& predictor, std::vector<Vec3> x,
                                      const schedule::AcceleratedSchedule& plan, std::mt19937_64& rng,
                                      std::atomic<std::size_t>* calls) {
  const std::size_t n = x.size();
  for (std::size_t i = plan.length(); i >= 1; --i) {
    const auto eps = predictor(x, plan.kept_steps[i - 1]);
    if (calls) ++*calls;
    if (eps.size() != n) throw DimensionError("reverse_sample: predictor returned the wrong point count");
    const auto z = i > 1 ? schedule::gaussian_points(n, rng) : std::vector<Vec3>(n, Vec3{0, 0, 0});
    x = schedule::reverse_step(x, i, eps, z, plan);
  }
  return x;
}

std::vector<Vec3> reverse_sample(const NoisePredictor& predictor, std::size_t n_points,
                                 const schedule::AcceleratedSchedule& plan, std::mt19937_64& rng,
                                 std::atomic<std::size_t>* calls) {
  auto x_T = schedule::gaussian_points(n_points, rng);
  return reverse_sample_from(predictor, std::move(x_T), plan, rng, calls);
}

std::vector<Vec3> generate_coarse(const denoiser::Denoiser& cgnet, const geometry::PointCloud& partial,
                                  std::size_t n_points, const schedule::AcceleratedSchedule& plan,
                                  std::mt19937_64& rng, std::atomic<std::size_t>* calls) {
  nn::NoGradScope no_grad;
  const auto condition = cgnet.encode_condition(partial);
  const NoisePredictor predictor = [&](std::span<const Vec3> x, std::size_t t) {
    return rows_to_points(cgnet.forward(x, condition, t));
  };
  return reverse_sample(predictor, n_points, plan, rng, calls);
}

std::vector<Vec3> refine(const denoiser::Denoiser& rfnet, std::span<const Vec3> coarse,
                         const geometry::PointCloud& partial) {
  nn::NoGradScope no_grad;
  return rows_to_points(denoiser::rfnet_forward(rfnet, coarse, rfnet.encode_condition(partial)).refined);
}

void cache_coarse(const denoiser::Denoiser& cgnet, std::vector<data::DatasetPair>& pairs, std::size_t k,
                  std::size_t n_points, const schedule::AcceleratedSchedule& plan, std::uint64_t seed,
                  std::size_t threads) {
  if (k == 0) throw ArgumentError("cache_coarse: k must be >= 1");
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, 3, i));
    auto& pair = pairs[i];
    pair.coarse.clear();
    for (std::size_t j = 0; j < k; ++j) {
      pair.coarse.emplace_back(generate_coarse(cgnet, pair.partial, n_points, plan, rng));
    }
  });
}

}  // namespace pdr::harness
