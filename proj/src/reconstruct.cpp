#include "treeflow/reconstruct.hpp"
#include <memory>

#include <cmath>
#include <limits>

#include "mc.hpp"
#include "treeflow/distinguish.hpp"

namespace treeflow {

ReconstructionOutcome recursive_empirical_reconstruction(const RootedTree& tree, const Channel& m,
                                                         const Configuration& config) {
  const int k = m.size();
  const int maxd = tree.max_depth();
  for (int v : tree.level(maxd))
    if (config.symbols[v] < 0 || config.symbols[v] >= k)
      fail(Errc::incomplete_level,
           "deepest level not covered at vertex " + std::to_string(v));

  // Row-major copy keeps the scoring loop contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m.matrix();

  ReconstructionOutcome out;
  out.per_vertex = config.symbols;  // leaves keep their observed symbols
  std::vector<std::int64_t> counts(k);
  for (int d = maxd - 1; d >= 0; --d) {
    for (int v : tree.level(d)) {
      auto ch = tree.children(v);
      if (ch.empty()) {
        if (out.per_vertex[v] < 0 || out.per_vertex[v] >= k)
          fail(Errc::incomplete_level, "shallow leaf " + std::to_string(v) + " not covered");
        continue;
      }
      std::fill(counts.begin(), counts.end(), 0);
      for (int c : ch) ++counts[out.per_vertex[c]];
      const double total = static_cast<double>(ch.size());
      int best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        const double* row = rows.data() + static_cast<std::size_t>(i) * k;
        double score = 0.0;
        for (int j = 0; j < k; ++j)
          score = std::max(score, std::abs(static_cast<double>(counts[j]) - total * row[j]));
        if (score < best_score) {  // strict: ties stay with the smallest state
          best_score = score;
          best = i;
        }
      }
      out.per_vertex[v] = best;
    }
  }
  out.estimate = out.per_vertex[tree.root()];
  return out;
}

int sufficient_branching(const Channel& m, double eps) {
  Channel quotient = quotient_channel(m);
  const int k = quotient.size();
  require(k >= 2, Errc::no_distinct_rows, "quotient channel has a single state");
  double delta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      delta = std::min(delta,
                       (quotient.row(i) - quotient.row(j)).lpNorm<Eigen::Infinity>());
  require(delta > 0.0, Errc::no_distinct_rows, "quotient rows not pairwise distinct");
  require(eps > 0.0 && eps < delta / 8.0, Errc::eps_too_large,
          "eps must lie in (0, delta/8) with delta = " + format_double(delta));
  // 2k exp(-2 b (delta/8)^2) <= eps/2 dominates the second condition.
  double slack = delta / 8.0;
  double need = std::log(4.0 * k / eps) / (2.0 * slack * slack);
  return static_cast<int>(std::ceil(need));
}

int plurality_root_estimate(const CensusVector& census, const Channel& m, int depth, int b) {
  const int k = m.size();
  require(static_cast<int>(census.size()) == k, Errc::bad_config, "census size mismatch");
  require(depth >= 0 && b >= 1, Errc::out_of_range, "depth and b must be nonnegative");
  Eigen::MatrixXd power = iterate(m, depth).matrix();
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double score = 0.0;
    for (int c = 0; c < k; ++c) {
      if (census[c] == 0) continue;
      double p = power(i, c);
      if (p <= 0.0) {
        score = -std::numeric_limits<double>::infinity();
        break;
      }
      score += static_cast<double>(census[c]) * std::log(p);
    }
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

ReconstructionTest make_reconstruction_test(const std::string& name, int level, int i, int j) {
  if (name == "recursive_empirical") {
    return [](const RootedTree& tree, const Channel& m, const Configuration& config) {
      return recursive_empirical_reconstruction(tree, m, config).estimate;
    };
  }
  if (name == "plurality") {
    return [level](const RootedTree& tree, const Channel& m, const Configuration& config) {
      CensusVector census = census_of(config, tree, m.size(), level);
      int b = std::max(1, tree.child_count(tree.root()));
      return plurality_root_estimate(census, m, level, b);
    };
  }
  if (name == "exact_posterior") {
    return [level, i, j](const RootedTree& tree, const Channel& m, const Configuration& config) {
      auto lv = tree.level(level);
      std::vector<int> antichain(lv.begin(), lv.end());
      auto lik = leaf_likelihoods(tree, m, config, antichain);
      return lik.scaled[i] >= lik.scaled[j] ? i : j;
    };
  }
  fail(Errc::bad_config, "unknown reconstruction test '" + name + "'");
}

DivergenceEstimate tv_lower_bound_from_test(const RootedTree& tree, const Channel& m, int level,
                                            int i, int j, const ReconstructionTest& test,
                                            std::int64_t samples, std::uint64_t seed,
                                            int threads) {
  require(samples >= 1, Errc::out_of_range, "samples must be >= 1");
  tree.level(level);
  auto stats = mc::run_scalar(samples, seed, threads, mc::kDefaultBatch, [&] {
    auto sampler = std::make_shared<ChannelSampler>(m);
    auto config = std::make_shared<Configuration>();
    return [&tree, &m, &test, sampler, config, i, j](Rng& rng) {
      broadcast_sample_into(tree, *sampler, i, rng, *config);
      double a = test(tree, m, *config) == i ? 1.0 : 0.0;
      broadcast_sample_into(tree, *sampler, j, rng, *config);
      double b = test(tree, m, *config) == i ? 1.0 : 0.0;
      return a - b;
    };
  });
  return {stats.mean(), stats.std_error(), stats.n, EstimateMethod::monte_carlo};
}

DivergenceEstimate mc_reconstruction_success(const RootedTree& tree, const Channel& m,
                                             std::int64_t trials, std::uint64_t seed,
                                             int threads) {
  require(trials >= 1, Errc::out_of_range, "trials must be >= 1");
  const int k = m.size();
  // Small batches keep the per-batch configuration buffers bounded on
  // large trees while still feeding every worker.
  std::int64_t batch = tree.vertex_count() > 1'000'000 ? 8 : 1024;
  auto stats = mc::run_scalar(trials, seed, threads, batch, [&] {
    auto sampler = std::make_shared<ChannelSampler>(m);
    auto config = std::make_shared<Configuration>();
    return [&tree, &m, sampler, config, k](Rng& rng) {
      int root = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k)));
      broadcast_sample_into(tree, *sampler, root, rng, *config);
      auto outcome = recursive_empirical_reconstruction(tree, m, *config);
      return outcome.estimate == root ? 1.0 : 0.0;
    };
  });
  return {stats.mean(), stats.std_error(), stats.n, EstimateMethod::monte_carlo};
}

// ---- exact success recursion ----------------------------------------------------

namespace {

void enumerate_compositions(int total, int parts, std::vector<int>& scratch,
                            std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    scratch.push_back(total);
    out.push_back(scratch);
    scratch.pop_back();
    return;
  }
  for (int c = 0; c <= total; ++c) {
    scratch.push_back(c);
    enumerate_compositions(total - c, parts - 1, scratch, out);
    scratch.pop_back();
  }
}

}  // namespace

double exact_reconstruction_success(const Channel& m, int b, int depth, std::int64_t comp_cap) {
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  require(depth >= 1, Errc::out_of_range, "depth must be >= 1");
  const int k = m.size();
  // C(b+k-1, k-1) compositions of b into k parts.
  double comp_count = 1.0;
  for (int t = 1; t <= k - 1; ++t) comp_count *= static_cast<double>(b + t) / t;
  require(comp_count <= static_cast<double>(comp_cap), Errc::support_cap,
          "composition count exceeds the cap");

  std::vector<std::vector<int>> comps;
  std::vector<int> scratch;
  enumerate_compositions(b, k, scratch, comps);

  // Decision of the empirical rule on each census (independent of the level).
  std::vector<int> decision(comps.size());
  for (std::size_t t = 0; t < comps.size(); ++t) {
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      double score = 0.0;
      for (int j = 0; j < k; ++j)
        score = std::max(score, std::abs(comps[t][j] - b * m(i, j)));
      if (score < best_score) {
        best_score = score;
        best = i;
      }
    }
    decision[t] = best;
  }

  std::vector<double> lgamma_cache(b + 2);
  for (int t = 0; t <= b + 1; ++t) lgamma_cache[t] = std::lgamma(static_cast<double>(t + 1));

  // rec(hat|s): law of the reconstructed symbol at a vertex `levels above
  // the leaves` given its true symbol. Children of a vertex with symbol s
  // reconstruct iid from row s of M * rec, so the census is multinomial.
  Eigen::MatrixXd rec = Eigen::MatrixXd::Identity(k, k);
  for (int d = 0; d < depth; ++d) {
    Eigen::MatrixXd mix = m.matrix() * rec;  // mix(s, hat)
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, k);
    for (int s = 0; s < k; ++s) {
      for (std::size_t t = 0; t < comps.size(); ++t) {
        double logp = lgamma_cache[b];
        bool possible = true;
        for (int j = 0; j < k && possible; ++j) {
          int c = comps[t][j];
          if (c == 0) continue;
          double p = mix(s, j);
          if (p <= 0.0)
            possible = false;
          else
            logp += c * std::log(p) - lgamma_cache[c];
        }
        if (possible) next(s, decision[t]) += std::exp(logp);
      }
    }
    rec = std::move(next);
  }
  return rec.diagonal().mean();
}

}  // namespace treeflow
