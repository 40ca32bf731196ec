#include "treeflow/broadcast.hpp"
#include <memory>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mc.hpp"

namespace treeflow {

namespace {

void check_state(const Channel& m, int s, const char* what) {
  require(s >= 0 && s < m.size(), Errc::out_of_range,
          std::string(what) + " " + std::to_string(s) + " outside the alphabet");
}

void check_prior(std::span<const double> prior) {
  double sum = 0.0;
  for (double p : prior) {
    require(p >= 0.0, Errc::bad_config, "prior entries must be nonnegative");
    require(std::abs(p - 1.0) > 1e-12, Errc::degenerate_prior, "prior puts mass 1 on one state");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, Errc::bad_config, "prior must sum to 1");
}

int sample_from_prior(std::span<const double> prior, Rng& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < prior.size(); ++s) {
    acc += prior[s];
    if (u < acc) return static_cast<int>(s);
  }
  return static_cast<int>(prior.size()) - 1;
}

double entropy_nats(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

}  // namespace

std::string estimate_to_json(const DivergenceEstimate& e) {
  nlohmann::json j;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["n_samples"] = e.n_samples;
  j["method"] = e.method == EstimateMethod::exact ? "exact" : "monte_carlo";
  return j.dump();
}

ChannelSampler::ChannelSampler(const Channel& m) {
  rows_.reserve(m.size());
  for (int i = 0; i < m.size(); ++i) {
    std::vector<double> w(m.size());
    for (int j = 0; j < m.size(); ++j) w[j] = m(i, j);
    rows_.emplace_back(w);
  }
}

void broadcast_sample_into(const RootedTree& tree, const ChannelSampler& sampler, int root_symbol,
                           Rng& rng, Configuration& out) {
  out.domain = Configuration::Domain::full_tree;
  out.domain_levels.clear();
  out.domain_vertices.clear();
  out.symbols.resize(tree.vertex_count());
  out.symbols[tree.root()] = root_symbol;
  for (int n = 1; n <= tree.max_depth(); ++n)
    for (int v : tree.level(n))
      out.symbols[v] = sampler.sample_from(out.symbols[tree.parent(v)], rng);
}

Configuration broadcast_sample(const RootedTree& tree, const Channel& m, int root_symbol,
                               std::uint64_t seed) {
  check_state(m, root_symbol, "root symbol");
  ChannelSampler sampler(m);
  Rng rng(seed);
  Configuration out;
  broadcast_sample_into(tree, sampler, root_symbol, rng, out);
  return out;
}

CensusVector census_of(const Configuration& config, const RootedTree& tree, int k, int n) {
  CensusVector counts(k, 0);
  for (int v : tree.level(n)) {
    int s = config.symbols[v];
    if (s < 0 || s >= k)
      fail(Errc::incomplete_level,
           "level " + std::to_string(n) + " not fully covered at vertex " + std::to_string(v));
    ++counts[s];
  }
  return counts;
}

Configuration noisy_boundary(const Configuration& config, const RootedTree& tree, const Channel& m,
                             int level, int m_steps, std::uint64_t seed) {
  require(m_steps >= 0, Errc::out_of_range, "m must be >= 0");
  Configuration out = config;
  if (m_steps == 0) return out;
  ChannelSampler sampler(iterate(m, m_steps));
  Rng rng(seed);
  for (int v : tree.level(level)) {
    int s = config.symbols[v];
    require(s >= 0 && s < m.size(), Errc::incomplete_level, "configuration does not cover the level");
    out.symbols[v] = sampler.sample_from(s, rng);
  }
  return out;
}

// ---- exact census recursion ------------------------------------------------

namespace {

using CensusMap = std::map<CensusVector, double>;

CensusMap convolve(const CensusMap& a, const CensusMap& b, std::size_t cap) {
  CensusMap out;
  CensusVector key;
  for (const auto& [ka, pa] : a) {
    for (const auto& [kb, pb] : b) {
      double p = pa * pb;
      if (p < 1e-300) continue;
      key = ka;
      for (std::size_t t = 0; t < key.size(); ++t) key[t] += kb[t];
      out[key] += p;
      require(out.size() <= cap, Errc::support_cap, "census support exceeds the cap");
    }
  }
  return out;
}

}  // namespace

CensusDistribution exact_census_distribution(int b, int depth, const Channel& m, int root_symbol,
                                             std::size_t support_cap) {
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  require(depth >= 0, Errc::out_of_range, "depth must be >= 0");
  check_state(m, root_symbol, "root symbol");
  const int k = m.size();

  // level[i] = distribution of the current-level census given subtree root i
  std::vector<CensusMap> level(k);
  for (int i = 0; i < k; ++i) {
    CensusVector e(k, 0);
    e[i] = 1;
    level[i][e] = 1.0;
  }
  for (int d = 0; d < depth; ++d) {
    std::vector<CensusMap> next(k);
    for (int i = 0; i < k; ++i) {
      CensusMap child;  // mixture over the child symbol
      for (int j = 0; j < k; ++j) {
        double w = m(i, j);
        if (w == 0.0) continue;
        for (const auto& [key, p] : level[j]) {
          double q = w * p;
          if (q >= 1e-300) child[key] += q;
        }
      }
      CensusMap acc = child;
      for (int t = 1; t < b; ++t) acc = convolve(acc, child, support_cap);
      next[i] = std::move(acc);
    }
    level = std::move(next);
  }
  CensusDistribution out;
  out.k = k;
  out.prob = std::move(level[root_symbol]);
  return out;
}

double census_total_variation(const CensusDistribution& p, const CensusDistribution& q) {
  double acc = 0.0;
  auto it = p.prob.begin();
  auto jt = q.prob.begin();
  while (it != p.prob.end() || jt != q.prob.end()) {
    if (jt == q.prob.end() || (it != p.prob.end() && it->first < jt->first)) {
      acc += it->second;
      ++it;
    } else if (it == p.prob.end() || jt->first < it->first) {
      acc += jt->second;
      ++jt;
    } else {
      acc += std::abs(it->second - jt->second);
      ++it;
      ++jt;
    }
  }
  return acc / 2.0;
}

// ---- exact level distribution ------------------------------------------------

namespace {

struct LevelDistBuilder {
  const RootedTree& tree;
  const Eigen::MatrixXd& m;
  int level;
  int k;
  std::size_t cap;
  std::vector<int> leaf_dfs;  // level vertices in combination order

  // Joint distribution over the level-vertices of v's subtree, one vector
  // per symbol of v.
  std::vector<std::vector<double>> build(int v) {
    if (tree.depth(v) == level) {
      leaf_dfs.push_back(v);
      std::vector<std::vector<double>> point(k, std::vector<double>(k, 0.0));
      for (int s = 0; s < k; ++s) point[s][s] = 1.0;
      return point;
    }
    std::vector<std::vector<double>> acc(k, std::vector<double>{1.0});
    for (int c : tree.children(v)) {
      auto child = build(c);
      const std::size_t nc = child[0].size();
      // Mix the child table over the child's symbol.
      std::vector<std::vector<double>> mixed(k, std::vector<double>(nc, 0.0));
      for (int s = 0; s < k; ++s)
        for (int sp = 0; sp < k; ++sp) {
          double w = m(s, sp);
          if (w == 0.0) continue;
          const auto& src = child[sp];
          auto& dst = mixed[s];
          for (std::size_t t = 0; t < nc; ++t) dst[t] += w * src[t];
        }
      const std::size_t na = acc[0].size();
      require(na <= cap / nc, Errc::support_cap, "level support exceeds the cap");
      std::vector<std::vector<double>> next(k, std::vector<double>(na * nc));
      for (int s = 0; s < k; ++s)
        for (std::size_t a = 0; a < na; ++a) {
          double base = acc[s][a];
          for (std::size_t t = 0; t < nc; ++t) next[s][a * nc + t] = base * mixed[s][t];
        }
      acc = std::move(next);
    }
    return acc;
  }
};

}  // namespace

std::vector<double> exact_level_distribution(const RootedTree& tree, const Channel& m, int level,
                                             int root_symbol, std::size_t support_cap) {
  check_state(m, root_symbol, "root symbol");
  require(level >= 0 && level <= tree.max_depth(), Errc::unknown_vertex, "no such level");
  LevelDistBuilder builder{tree, m.matrix(), level, m.size(), support_cap, {}};
  auto table = builder.build(tree.root());
  std::vector<double> dist = std::move(table[root_symbol]);

  // Reindex from combination order to ascending vertex ids when they differ.
  if (!std::is_sorted(builder.leaf_dfs.begin(), builder.leaf_dfs.end())) {
    const std::size_t n_leaves = builder.leaf_dfs.size();
    const std::size_t k = static_cast<std::size_t>(m.size());
    std::vector<int> sorted = builder.leaf_dfs;
    std::sort(sorted.begin(), sorted.end());
    // place[t] = radix weight of combination-order position t in the
    // sorted-order encoding.
    std::vector<std::size_t> place(n_leaves);
    for (std::size_t t = 0; t < n_leaves; ++t) {
      std::size_t rank = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), builder.leaf_dfs[t]) - sorted.begin());
      std::size_t w = 1;
      for (std::size_t e = 0; e < n_leaves - 1 - rank; ++e) w *= k;
      place[t] = w;
    }
    std::vector<double> out(dist.size());
    std::vector<std::size_t> digits(n_leaves);
    for (std::size_t id = 0; id < dist.size(); ++id) {
      std::size_t tmp = id;
      for (std::size_t t = n_leaves; t-- > 0;) {
        digits[t] = tmp % k;
        tmp /= k;
      }
      std::size_t target = 0;
      for (std::size_t t = 0; t < n_leaves; ++t) target += digits[t] * place[t];
      out[target] = dist[id];
    }
    dist = std::move(out);
  }
  return dist;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), Errc::bad_config, "distributions on different supports");
  double acc = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) acc += std::abs(p[t] - q[t]);
  return acc / 2.0;
}

double chi_square_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), Errc::bad_config, "distributions on different supports");
  double acc = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    double s = p[t] + q[t];
    if (s <= 0.0) continue;
    double d = p[t] - q[t];
    acc += d * d / s;
  }
  return std::sqrt(acc / 2.0);
}

double exact_mutual_information(const RootedTree& tree, const Channel& m, int level,
                                std::span<const double> prior, std::size_t support_cap) {
  require(static_cast<int>(prior.size()) == m.size(), Errc::bad_config, "prior size mismatch");
  check_prior(prior);
  const int k = m.size();
  std::vector<std::vector<double>> cond(k);
  for (int s = 0; s < k; ++s) cond[s] = exact_level_distribution(tree, m, level, s, support_cap);
  const std::size_t n = cond[0].size();
  double info = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double marginal = 0.0;
    for (int s = 0; s < k; ++s) marginal += prior[s] * cond[s][t];
    if (marginal <= 0.0) continue;
    for (int s = 0; s < k; ++s) {
      double joint = prior[s] * cond[s][t];
      if (joint > 0.0) info += joint * std::log(cond[s][t] / marginal);
    }
  }
  return std::max(info, 0.0);
}

// ---- likelihoods --------------------------------------------------------------

namespace {

// Upward sum-product over the ancestors of the antichain. Messages are
// rescaled per vertex to keep doubles in range at any depth.
struct MessagePass {
  const RootedTree& tree;
  const Eigen::MatrixXd& m;
  std::vector<Eigen::VectorXd> msg;
  std::vector<double> logscale;
  std::vector<char> active;

  explicit MessagePass(const RootedTree& t, const Eigen::MatrixXd& mat)
      : tree(t), m(mat), msg(t.vertex_count()), logscale(t.vertex_count(), 0.0),
        active(t.vertex_count(), 0) {}

  LikelihoodVector run(const Configuration& config, std::span<const int> antichain) {
    const int k = static_cast<int>(m.rows());
    std::fill(active.begin(), active.end(), 0);
    for (int w : antichain) {
      tree.check_vertex(w);
      int s = config.symbols[w];
      if (s < 0 || s >= k)
        fail(Errc::incomplete_antichain,
             "configuration does not cover vertex " + std::to_string(w));
      active[w] = 2;  // observed
      for (int u = w; u != tree.root();) {
        u = tree.parent(u);
        if (active[u]) break;
        active[u] = 1;  // interior
      }
    }
    require(active[tree.root()] != 0, Errc::incomplete_antichain, "empty antichain");

    for (int n = tree.max_depth(); n >= 0; --n) {
      for (int v : tree.level(n)) {
        if (!active[v]) continue;
        if (active[v] == 2) {
          msg[v] = Eigen::VectorXd::Zero(k);
          msg[v][config.symbols[v]] = 1.0;
          logscale[v] = 0.0;
          continue;
        }
        Eigen::VectorXd acc = Eigen::VectorXd::Ones(k);
        double ls = 0.0;
        for (int c : tree.children(v)) {
          if (!active[c]) continue;
          acc = acc.cwiseProduct(m * msg[c]);
          ls += logscale[c];
        }
        double top = acc.maxCoeff();
        if (top > 0.0 && top != 1.0) {
          acc /= top;
          ls += std::log(top);
        }
        msg[v] = std::move(acc);
        logscale[v] = ls;
      }
    }
    LikelihoodVector out;
    out.scaled = msg[tree.root()];
    out.log_scale = logscale[tree.root()];
    return out;
  }
};

}  // namespace

LikelihoodVector leaf_likelihoods(const RootedTree& tree, const Channel& m,
                                  const Configuration& config, std::span<const int> antichain) {
  require(is_antichain(tree, antichain), Errc::incomplete_antichain,
          "observation set is not an antichain");
  MessagePass pass(tree, m.matrix());
  return pass.run(config, antichain);
}

double leaf_likelihood(const RootedTree& tree, const Channel& m, const Configuration& config,
                       std::span<const int> antichain, int root_symbol) {
  check_state(m, root_symbol, "root symbol");
  return leaf_likelihoods(tree, m, config, antichain).value(root_symbol);
}

// ---- Monte Carlo divergence estimators ------------------------------------------

namespace {

struct LevelSampleContext {
  ChannelSampler sampler;
  MessagePass pass;
  Configuration config;
  std::vector<int> antichain;

  LevelSampleContext(const RootedTree& tree, const Channel& m, int level)
      : sampler(m), pass(tree, m.matrix()) {
    auto lv = tree.level(level);
    antichain.assign(lv.begin(), lv.end());
  }
};

}  // namespace

DivergenceEstimate mc_total_variation(const RootedTree& tree, const Channel& m, int level, int i,
                                      int j, std::int64_t samples, std::uint64_t seed,
                                      int threads) {
  check_state(m, i, "state");
  check_state(m, j, "state");
  tree.level(level);  // validate before entering worker threads
  require(samples >= 1, Errc::out_of_range, "samples must be >= 1");
  auto stats = mc::run_scalar(samples, seed, threads, mc::kDefaultBatch, [&] {
    auto ctx = std::make_shared<LevelSampleContext>(tree, m, level);
    return [ctx, &tree, i, j](Rng& rng) {
      int root = rng.next_bernoulli(0.5) ? i : j;
      broadcast_sample_into(tree, ctx->sampler, root, rng, ctx->config);
      auto lik = ctx->pass.run(ctx->config, ctx->antichain);
      double li = lik.scaled[i], lj = lik.scaled[j];
      return (li + lj) > 0.0 ? std::abs(li - lj) / (li + lj) : 0.0;
    };
  });
  return {stats.mean(), stats.std_error(), stats.n, EstimateMethod::monte_carlo};
}

DivergenceEstimate mc_chi_square(const RootedTree& tree, const Channel& m, int level, int i, int j,
                                 std::int64_t samples, std::uint64_t seed, int threads) {
  check_state(m, i, "state");
  check_state(m, j, "state");
  tree.level(level);
  require(samples >= 1, Errc::out_of_range, "samples must be >= 1");
  auto stats = mc::run_scalar(samples, seed, threads, mc::kDefaultBatch, [&] {
    auto ctx = std::make_shared<LevelSampleContext>(tree, m, level);
    return [ctx, &tree, i, j](Rng& rng) {
      int root = rng.next_bernoulli(0.5) ? i : j;
      broadcast_sample_into(tree, ctx->sampler, root, rng, ctx->config);
      auto lik = ctx->pass.run(ctx->config, ctx->antichain);
      double li = lik.scaled[i], lj = lik.scaled[j];
      double r = (li + lj) > 0.0 ? (li - lj) / (li + lj) : 0.0;
      return r * r;
    };
  });
  DivergenceEstimate out;
  out.n_samples = stats.n;
  out.method = EstimateMethod::monte_carlo;
  double mean = stats.mean();
  if (mean > 0.0) {
    out.value = std::sqrt(mean);
    out.std_error = stats.std_error() / (2.0 * out.value);  // delta method
  }
  return out;
}

DivergenceEstimate mc_mutual_information(const RootedTree& tree, const Channel& m, int level,
                                         std::span<const double> prior, std::int64_t samples,
                                         std::uint64_t seed, int threads) {
  require(static_cast<int>(prior.size()) == m.size(), Errc::bad_config, "prior size mismatch");
  check_prior(prior);
  tree.level(level);
  require(samples >= 1, Errc::out_of_range, "samples must be >= 1");
  const double h_prior = entropy_nats(prior);
  std::vector<double> prior_copy(prior.begin(), prior.end());
  auto stats = mc::run_scalar(samples, seed, threads, mc::kDefaultBatch, [&] {
    auto ctx = std::make_shared<LevelSampleContext>(tree, m, level);
    return [ctx, &tree, prior_copy, h_prior](Rng& rng) {
      int root = sample_from_prior(prior_copy, rng);
      broadcast_sample_into(tree, ctx->sampler, root, rng, ctx->config);
      auto lik = ctx->pass.run(ctx->config, ctx->antichain);
      double norm = 0.0;
      const int k = static_cast<int>(prior_copy.size());
      double post_h = 0.0;
      for (int s = 0; s < k; ++s) norm += prior_copy[s] * lik.scaled[s];
      for (int s = 0; s < k; ++s) {
        double p = prior_copy[s] * lik.scaled[s] / norm;
        if (p > 0.0) post_h -= p * std::log(p);
      }
      return h_prior - post_h;
    };
  });
  return {stats.mean(), stats.std_error(), stats.n, EstimateMethod::monte_carlo};
}

}  // namespace treeflow
