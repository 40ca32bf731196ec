#pragma once

#include <functional>
#include <string>

#include "treeflow/broadcast.hpp"

namespace treeflow {

struct ReconstructionOutcome {
  int estimate = 0;
  std::vector<std::int32_t> per_vertex;  // reconstructed symbol for every vertex
};

/// Bottom-up plurality-style reconstruction: leaves keep their observed
/// symbol; an internal vertex with c children forms the empirical count
/// vector X of its children's reconstructed symbols and picks
/// argmin_i ||X - c * M_i||_inf, ties to the smallest state.
/// The configuration must cover the deepest level.
ReconstructionOutcome recursive_empirical_reconstruction(const RootedTree& tree, const Channel& m,
                                                         const Configuration& config);

/// Smallest branching b for which the Hoeffding bounds
///   2k exp(-2 b (delta/8)^2) <= eps/2  and  2 exp(-2 b (delta/8)^2) <= eps/2
/// guarantee per-level failure at most eps, where delta is the minimum
/// pairwise inf-distance between rows of the quotient channel.
/// Requires 0 < eps < delta / 8.
int sufficient_branching(const Channel& m, double eps);

/// Heuristic baseline: argmax over root hypotheses of the census
/// likelihood under a mean-field independence approximation (level
/// symbols treated as iid draws from e_i M^n). Ties to the smallest state.
int plurality_root_estimate(const CensusVector& census, const Channel& m, int depth, int b);

using ReconstructionTest = std::function<int(const RootedTree&, const Channel&, const Configuration&)>;

/// Named test procedures for experiment configs: "recursive_empirical",
/// "plurality", "exact_posterior" (the optimal likelihood-ratio test for
/// the hypothesis pair, argmax restricted to {i,j}).
ReconstructionTest make_reconstruction_test(const std::string& name, int level, int i, int j);

/// Monte Carlo estimate of P^i[T = i] - P^j[T = i], a total-variation
/// lower bound valid for any test T. The raw value is kept (possibly
/// negative); reporting layers clamp to [0,1].
DivergenceEstimate tv_lower_bound_from_test(const RootedTree& tree, const Channel& m, int level,
                                            int i, int j, const ReconstructionTest& test,
                                            std::int64_t samples, std::uint64_t seed,
                                            int threads = 1);

/// Monte Carlo success probability of recursive empirical reconstruction
/// with the root drawn uniformly from the alphabet.
DivergenceEstimate mc_reconstruction_success(const RootedTree& tree, const Channel& m,
                                             std::int64_t trials, std::uint64_t seed,
                                             int threads = 1);

/// Exact success probability of recursive empirical reconstruction on the
/// b-ary tree of the given depth, root uniform over the alphabet. Uses the
/// fact that the child census of reconstructed symbols is multinomial
/// given the parent symbol, so the per-level decision law satisfies an
/// exact recursion over census compositions. Requires the composition
/// count C(b+k-1, k-1) to stay below comp_cap.
double exact_reconstruction_success(const Channel& m, int b, int depth,
                                    std::int64_t comp_cap = 2'000'000);

}  // namespace treeflow
