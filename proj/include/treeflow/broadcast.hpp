#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treeflow/channel.hpp"
#include "treeflow/rng.hpp"
#include "treeflow/tree.hpp"

namespace treeflow {

/// Symbol assignment on a vertex subset; -1 marks vertices outside the
/// recorded domain.
struct Configuration {
  enum class Domain { full_tree, levels, antichain };

  Domain domain = Domain::full_tree;
  std::vector<int> domain_levels;    // when domain == levels
  std::vector<int> domain_vertices;  // when domain == antichain
  std::vector<std::int32_t> symbols; // indexed by vertex id

  int at(int v) const { return symbols[v]; }
};

using CensusVector = std::vector<std::int64_t>;

/// Sparse exact distribution over census vectors.
struct CensusDistribution {
  int k = 0;
  std::map<CensusVector, double> prob;
};

enum class EstimateMethod { exact, monte_carlo };

struct DivergenceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  EstimateMethod method = EstimateMethod::monte_carlo;
};

std::string estimate_to_json(const DivergenceEstimate& e);

/// Per-row alias tables for fast repeated sampling from one channel.
class ChannelSampler {
 public:
  explicit ChannelSampler(const Channel& m);
  int sample_from(int state, Rng& rng) const { return rows_[state].sample(rng); }
  int size() const { return static_cast<int>(rows_.size()); }

 private:
  std::vector<AliasTable> rows_;
};

// ---- simulation --------------------------------------------------------

/// Propagates root_symbol down the tree: each non-root vertex draws its
/// symbol from the channel row of its parent's symbol. Deterministic
/// given (seed, tree, channel, root_symbol).
Configuration broadcast_sample(const RootedTree& tree, const Channel& m, int root_symbol,
                               std::uint64_t seed);

/// Same, reusing caller-provided storage and generator.
void broadcast_sample_into(const RootedTree& tree, const ChannelSampler& sampler, int root_symbol,
                           Rng& rng, Configuration& out);

/// Per-symbol counts over level n; the configuration must cover it.
CensusVector census_of(const Configuration& config, const RootedTree& tree, int k, int n);

/// Passes every covered symbol of level n independently through M^m.
Configuration noisy_boundary(const Configuration& config, const RootedTree& tree, const Channel& m,
                             int level, int m_steps, std::uint64_t seed);

// ---- exact distributions -------------------------------------------------

/// Exact conditional distribution of the level-n census on the b-ary tree
/// given the root symbol, by convolution of the per-child mixtures.
CensusDistribution exact_census_distribution(int b, int depth, const Channel& m, int root_symbol,
                                             std::size_t support_cap = 2'000'000);

double census_total_variation(const CensusDistribution& p, const CensusDistribution& q);

/// Exact joint conditional distribution of the level-n configuration
/// given the root symbol. The returned vector is indexed by mixed-radix
/// encoding over the level's vertices in ascending id order (first vertex
/// = most significant digit).
std::vector<double> exact_level_distribution(const RootedTree& tree, const Channel& m, int level,
                                             int root_symbol, std::size_t support_cap = 10'000'000);

double total_variation(std::span<const double> p, std::span<const double> q);
double chi_square_distance(std::span<const double> p, std::span<const double> q);

/// Exact I(root; level-n configuration) in nats for the given root prior.
double exact_mutual_information(const RootedTree& tree, const Channel& m, int level,
                                std::span<const double> prior,
                                std::size_t support_cap = 10'000'000);

// ---- likelihoods ---------------------------------------------------------

/// Likelihood of the observed antichain configuration for every root
/// symbol, from one upward sum-product pass. Stored scaled to avoid
/// underflow: likelihood[s] = scaled[s] * exp(log_scale).
struct LikelihoodVector {
  Eigen::VectorXd scaled;
  double log_scale = 0.0;
  double value(int s) const { return scaled[s] * std::exp(log_scale); }
};

LikelihoodVector leaf_likelihoods(const RootedTree& tree, const Channel& m,
                                  const Configuration& config, std::span<const int> antichain);

/// P[config on W | root = root_symbol]; W must be an antichain covered by
/// the configuration.
double leaf_likelihood(const RootedTree& tree, const Channel& m, const Configuration& config,
                       std::span<const int> antichain, int root_symbol);

// ---- Monte Carlo divergence estimators ------------------------------------

/// Unbiased estimate of D_V(P_n^i, P_n^j): roots drawn uniformly from
/// {i,j}, statistic |L_i - L_j| / (L_i + L_j) per sample.
DivergenceEstimate mc_total_variation(const RootedTree& tree, const Channel& m, int level, int i,
                                      int j, std::int64_t samples, std::uint64_t seed,
                                      int threads = 1);

/// Estimates the chi-square distance via the squared ratio statistic;
/// reports the square root with a delta-method standard error.
DivergenceEstimate mc_chi_square(const RootedTree& tree, const Channel& m, int level, int i, int j,
                                 std::int64_t samples, std::uint64_t seed, int threads = 1);

/// Estimates I(root; level-n configuration) in nats: the root posterior is
/// exact per sample, the outer expectation is Monte Carlo.
DivergenceEstimate mc_mutual_information(const RootedTree& tree, const Channel& m, int level,
                                         std::span<const double> prior, std::int64_t samples,
                                         std::uint64_t seed, int threads = 1);

}  // namespace treeflow
