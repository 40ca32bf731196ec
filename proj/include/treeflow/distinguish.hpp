#pragma once

#include <optional>

#include "treeflow/channel.hpp"
#include "treeflow/partition.hpp"

namespace treeflow {

/// Least equivalence relation closed under: merge i and j whenever their
/// rows, summed over the current blocks, agree on every block.
///
/// Computed by Kleene iteration from the all-singletons partition. The
/// merge rule is monotone in the relation (coarsening the blocks only
/// weakens the row-agreement condition), so merges never have to be
/// undone and the iteration reaches the least closed relation in at most
/// k-1 rounds. Pairs are scanned in lexicographic order; the fixed point
/// does not depend on that order (tested, not assumed).
///
/// tol = 0 gives exact row comparison for hand-entered dyadic channels.
AlphabetPartition indistinguishability_partition(const Channel& m, double tol = kLumpTol);

/// True iff the partition has a single block.
bool all_indistinguishable(const Channel& m);

/// lump(m, indistinguishability_partition(m)); the result always has an
/// all-singletons indistinguishability partition.
Channel quotient_channel(const Channel& m);

/// Smallest n <= max_steps such that within every indistinguishability
/// class all rows of M^n coincide (tolerance 1e-12), i.e. the depth after
/// which states in a class give identical conditional distributions on a
/// path. nullopt if not reached by max_steps.
std::optional<int> indistinguishable_merge_depth(const Channel& m, int max_steps = 64);

}  // namespace treeflow
