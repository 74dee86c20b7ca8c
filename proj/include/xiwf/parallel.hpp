#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "xiwf/mc_estimate.hpp"
#include "xiwf/random.hpp"

namespace xiwf {

/// Number of workers used by replicate-parallel engines. 0 means
/// std::thread::hardware_concurrency().
inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Calls fn(i) for i in [0, count) on a pool of workers. fn must only touch
/// state owned by index i.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned workers = 0) {
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Averages `count` draws of sample(rng). Draws are split into a fixed number
/// of chunks with their own RNG stream, and chunk estimates are merged in
/// chunk order, so the result depends only on (seed, stream, count).
template <class Sample>
McEstimate parallel_estimate(std::uint64_t count, std::uint64_t seed,
                             std::uint64_t stream, Sample&& sample,
                             unsigned workers = 0) {
  constexpr std::uint64_t kChunks = 64;
  std::vector<McEstimate> parts(kChunks);
  parallel_for(
      kChunks,
      [&](std::size_t c) {
        const std::uint64_t begin = count * c / kChunks;
        const std::uint64_t end = count * (c + 1) / kChunks;
        Rng rng = make_rng(seed, stream, c);
        McEstimate acc;
        for (std::uint64_t i = begin; i < end; ++i) acc.add(sample(rng));
        parts[c] = acc;
      },
      workers);
  McEstimate total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace xiwf

namespace xiwf {

/// Like parallel_estimate, but replicate i always uses make_rng(seed, stream, i),
/// so single replicates can be reproduced in isolation.
template <class Sample>
McEstimate replicate_estimate(std::uint64_t count, std::uint64_t seed, std::uint64_t stream,
                              Sample&& sample, unsigned workers = 0) {
  constexpr std::uint64_t kChunks = 64;
  std::vector<McEstimate> parts(kChunks);
  parallel_for(
      kChunks,
      [&](std::size_t c) {
        const std::uint64_t begin = count * c / kChunks;
        const std::uint64_t end = count * (c + 1) / kChunks;
        McEstimate acc;
        for (std::uint64_t i = begin; i < end; ++i) {
          Rng rng = make_rng(seed, stream, i);
          acc.add(sample(rng, i));
        }
        parts[c] = acc;
      },
      workers);
  McEstimate total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace xiwf
