#include "treeflow/rng.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace treeflow {

AliasTable::AliasTable(const std::vector<double>& weights) {
  const int n = static_cast<int>(weights.size());
  if (n == 0) throw std::invalid_argument("empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("zero total weight");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (int i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

  std::vector<int> small, large;
  small.reserve(n);
  large.reserve(n);
  for (int i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);

  while (!small.empty() && !large.empty()) {
    int s = small.back();
    small.pop_back();
    int l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = scaled[l] + scaled[s] - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (int i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (int i : small) {  // numeric leftovers
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

void parallel_batches(std::int64_t n_batches, int threads,
                      const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || n_batches <= 1) {
    for (std::int64_t i = 0; i < n_batches; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::int64_t i = next.fetch_add(1);
      if (i >= n_batches) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int n_workers = std::min<std::int64_t>(threads, n_batches);
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace treeflow
