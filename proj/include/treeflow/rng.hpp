#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace treeflow {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic generator (xoshiro256++). Streams derived from
/// (seed, stream) are independent for distinct stream indices; this is
/// the seeding contract every Monte Carlo batch in the library uses.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = splitmix64(seed) ^ splitmix64(~stream);
    for (auto& word : state_) word = x = splitmix64(x + 0x9e3779b97f4a7c15ull);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Lemire's multiply-shift; n must be >= 1.
  std::uint32_t next_below(std::uint32_t n) {
    std::uint64_t x = next_u64() >> 32;
    std::uint64_t m = x * n;
    return static_cast<std::uint32_t>(m >> 32);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

/// Walker alias table for O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);

  /// One generator call per draw: the high half selects the slot, the low
  /// half decides between the slot and its alias (32-bit threshold
  /// resolution, negligible against Monte Carlo noise).
  int sample(Rng& rng) const {
    std::uint64_t r = rng.next_u64();
    std::uint32_t idx = static_cast<std::uint32_t>(((r >> 32) * prob_.size()) >> 32);
    double u = static_cast<double>(r & 0xffffffffull) * 0x1.0p-32;
    return u < prob_[idx] ? static_cast<int>(idx) : alias_[idx];
  }

  int size() const { return static_cast<int>(prob_.size()); }

 private:
  std::vector<double> prob_;
  std::vector<int> alias_;
};

/// Runs fn(batch_index) for batch_index in [0, n_batches) on `threads`
/// workers. Callers make results deterministic by writing into per-batch
/// slots and merging in index order.
void parallel_batches(std::int64_t n_batches, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace treeflow
