#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace fkmd {

/// Pairwise (tree) summation. The association order depends only on the
/// length of the input, so results are independent of how the values were
/// produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

inline MeanStderr summarize(std::span<const double> xs) {
  MeanStderr out;
  out.count = xs.size();
  if (xs.empty()) return out;
  out.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  std::vector<double> dev(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - out.mean) * (xs[i] - out.mean);
  const double var = pairwise_sum(dev) / static_cast<double>(xs.size() - 1);
  out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

/// Runs fn(block) for block = 0..blocks-1 on up to `threads` workers. Work is
/// handed out dynamically; callers write results into block-indexed storage,
/// which keeps the output independent of the worker count.
template <typename F>
void parallel_blocks(std::size_t blocks, int threads, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(std::min(workers, blocks));
  for (std::size_t w = 0; w < std::min(workers, blocks); ++w) {
    pool.emplace_back([&] {
      for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

/// parallel_blocks over individual items grouped into fixed-size blocks.
template <typename F>
void parallel_for(std::size_t items, int threads, F&& fn, std::size_t block = 256) {
  const std::size_t blocks = (items + block - 1) / block;
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(items, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) fn(i);
  });
}

}  // namespace fkmd
