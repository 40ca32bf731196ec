#pragma once

#include <vector>

#include "treeflow/errors.hpp"

namespace treeflow {

/// Partition of the alphabet {0..k-1} into disjoint nonempty blocks.
/// Blocks are sorted by their minimum element and each block is sorted,
/// so two partitions are equal iff their block lists are equal.
struct AlphabetPartition {
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of;  // state -> block index

  int alphabet_size() const { return static_cast<int>(block_of.size()); }
  int block_count() const { return static_cast<int>(blocks.size()); }

  static AlphabetPartition singletons(int k);

  /// Builds (and validates) a partition from explicit blocks.
  static AlphabetPartition from_blocks(int k, std::vector<std::vector<int>> blocks);

  /// Builds a partition from an arbitrary state -> label map; labels are
  /// renumbered so blocks come out in canonical order.
  static AlphabetPartition from_labels(const std::vector<int>& labels);

  bool operator==(const AlphabetPartition& other) const { return blocks == other.blocks; }
};

}  // namespace treeflow
