#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "treeflow/rng.hpp"

namespace treeflow::mc {

// Deterministic Monte Carlo driver: sample index space is split into
// fixed batches, batch i draws from the stream (seed, i), and partial
// sums merge in batch order. Results are bit-identical for any thread
// count. make_stat() is called once per batch and may own scratch
// buffers; the returned callable produces one sample statistic.
inline constexpr std::int64_t kDefaultBatch = 4096;

struct ScalarStats {
  double sum = 0.0, sumsq = 0.0;
  std::int64_t n = 0;

  double mean() const { return n > 0 ? sum / n : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    return std::max(0.0, (sumsq - n * m * m) / (n - 1));
  }
  double std_error() const { return n > 0 ? std::sqrt(variance() / n) : 0.0; }
};

template <class MakeStat>
ScalarStats run_scalar(std::int64_t samples, std::uint64_t seed, int threads,
                       std::int64_t batch_size, MakeStat&& make_stat) {
  std::int64_t n_batches = (samples + batch_size - 1) / batch_size;
  std::vector<ScalarStats> slots(static_cast<std::size_t>(n_batches));
  parallel_batches(n_batches, threads, [&](std::int64_t bi) {
    Rng rng(seed, static_cast<std::uint64_t>(bi));
    auto stat = make_stat();
    std::int64_t lo = bi * batch_size, hi = std::min(samples, lo + batch_size);
    ScalarStats s;
    for (std::int64_t t = lo; t < hi; ++t) {
      double x = stat(rng);
      s.sum += x;
      s.sumsq += x * x;
      ++s.n;
    }
    slots[static_cast<std::size_t>(bi)] = s;
  });
  ScalarStats total;
  for (const auto& s : slots) {
    total.sum += s.sum;
    total.sumsq += s.sumsq;
    total.n += s.n;
  }
  return total;
}

template <std::size_t D>
struct MultiStats {
  std::array<double, D> sum{}, sumsq{};
  std::int64_t n = 0;

  double mean(std::size_t d) const { return n > 0 ? sum[d] / n : 0.0; }
  double variance(std::size_t d) const {
    if (n < 2) return 0.0;
    double m = mean(d);
    return std::max(0.0, (sumsq[d] - n * m * m) / (n - 1));
  }
  double std_error(std::size_t d) const { return n > 0 ? std::sqrt(variance(d) / n) : 0.0; }
};

template <std::size_t D, class MakeStat>
MultiStats<D> run_multi(std::int64_t samples, std::uint64_t seed, int threads,
                        std::int64_t batch_size, MakeStat&& make_stat) {
  std::int64_t n_batches = (samples + batch_size - 1) / batch_size;
  std::vector<MultiStats<D>> slots(static_cast<std::size_t>(n_batches));
  parallel_batches(n_batches, threads, [&](std::int64_t bi) {
    Rng rng(seed, static_cast<std::uint64_t>(bi));
    auto stat = make_stat();
    std::int64_t lo = bi * batch_size, hi = std::min(samples, lo + batch_size);
    MultiStats<D> s;
    for (std::int64_t t = lo; t < hi; ++t) {
      std::array<double, D> x = stat(rng);
      for (std::size_t d = 0; d < D; ++d) {
        s.sum[d] += x[d];
        s.sumsq[d] += x[d] * x[d];
      }
      ++s.n;
    }
    slots[static_cast<std::size_t>(bi)] = s;
  });
  MultiStats<D> total;
  for (const auto& s : slots) {
    for (std::size_t d = 0; d < D; ++d) {
      total.sum[d] += s.sum[d];
      total.sumsq[d] += s.sumsq[d];
    }
    total.n += s.n;
  }
  return total;
}

}  // namespace treeflow::mc
