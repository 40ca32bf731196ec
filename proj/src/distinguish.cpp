#include "treeflow/distinguish.hpp"

#include <cmath>

#include "treeflow/errors.hpp"

namespace treeflow {

namespace {

// Rows of m summed over the blocks of the current partition.
Eigen::MatrixXd block_sums(const Channel& m, const AlphabetPartition& part) {
  int k = m.size();
  int nb = part.block_count();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, nb);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) sums(i, part.block_of[j]) += m(i, j);
  return sums;
}

}  // namespace

AlphabetPartition indistinguishability_partition(const Channel& m, double tol) {
  int k = m.size();
  std::vector<int> labels(k);
  for (int i = 0; i < k; ++i) labels[i] = i;
  AlphabetPartition part = AlphabetPartition::singletons(k);

  bool merged = true;
  while (merged && part.block_count() > 1) {
    merged = false;
    Eigen::MatrixXd sums = block_sums(m, part);
    for (int i = 0; i < k && !merged; ++i) {
      for (int j = i + 1; j < k && !merged; ++j) {
        if (part.block_of[i] == part.block_of[j]) continue;
        if ((sums.row(i) - sums.row(j)).lpNorm<Eigen::Infinity>() <= tol) {
          int keep = labels[i], drop = labels[j];
          for (int s = 0; s < k; ++s)
            if (labels[s] == drop) labels[s] = keep;
          part = AlphabetPartition::from_labels(labels);
          merged = true;  // partition coarsened; recompute the sums
        }
      }
    }
  }
  return part;
}

bool all_indistinguishable(const Channel& m) {
  return indistinguishability_partition(m).block_count() == 1;
}

Channel quotient_channel(const Channel& m) {
  return lump(m, indistinguishability_partition(m));
}

std::optional<int> indistinguishable_merge_depth(const Channel& m, int max_steps) {
  AlphabetPartition part = indistinguishability_partition(m);
  int k = m.size();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(k, k);
  for (int n = 0; n <= max_steps; ++n) {
    bool all_equal = true;
    for (const auto& block : part.blocks) {
      for (std::size_t r = 1; r < block.size() && all_equal; ++r) {
        if ((power.row(block[0]) - power.row(block[r])).lpNorm<Eigen::Infinity>() > 1e-12)
          all_equal = false;
      }
      if (!all_equal) break;
    }
    if (all_equal) return n;
    power = power * m.matrix();
  }
  return std::nullopt;
}

}  // namespace treeflow
