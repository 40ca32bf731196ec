#include <cmath>
#include <numeric>

#include "doctest.h"
#include "treeflow/broadcast.hpp"

using namespace treeflow;

namespace {

std::uint64_t fnv1a(const std::vector<std::int32_t>& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int32_t x : data) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
    h *= 1099511628211ull;
  }
  return h;
}

Channel rank_one(const std::vector<double>& row) {
  int k = static_cast<int>(row.size());
  Eigen::MatrixXd m(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = row[j];
  return Channel::from_entries(m);
}

}  // namespace

TEST_CASE("broadcast propagates deterministically") {
  RootedTree t = RootedTree::bary(2, 6);
  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(3, 3));
  Configuration c = broadcast_sample(t, id, 2, 1);
  for (int v = 0; v < t.vertex_count(); ++v) CHECK(c.symbols[v] == 2);

  Configuration a = broadcast_sample(t, bsc(0.1), 0, 42);
  Configuration b = broadcast_sample(t, bsc(0.1), 0, 42);
  CHECK(a.symbols == b.symbols);
  CHECK(broadcast_sample(t, bsc(0.1), 0, 43).symbols != a.symbols);
}

TEST_CASE("broadcast regression fixture") {
  // pinned digest of the configuration stream (seed 42, bsc(0.1), depth 10)
  RootedTree t = RootedTree::bary(2, 10);
  Configuration c = broadcast_sample(t, bsc(0.1), 0, 42);
  CHECK(fnv1a(c.symbols) == 0x49e174e43bb8eb6aull);
}

TEST_CASE("bsc(1/2) gives an unbiased coin at the leaves") {
  RootedTree t = RootedTree::bary(2, 10);
  Configuration c = broadcast_sample(t, bsc(0.5), 0, 9);
  auto counts = census_of(c, t, 2, 10);
  double n = 1024, mean = n / 2, sd = std::sqrt(n) / 2;
  CHECK(std::abs(counts[1] - mean) < 4 * sd);
}

TEST_CASE("census counting") {
  RootedTree t = RootedTree::bary(2, 3);
  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  Configuration c = broadcast_sample(t, id, 0, 1);
  auto counts = census_of(c, t, 2, 3);
  CHECK(counts == CensusVector{8, 0});
  CHECK(census_of(c, t, 2, 0) == CensusVector{1, 0});

  Configuration partial;
  partial.symbols.assign(t.vertex_count(), -1);
  CHECK_THROWS_AS(census_of(partial, t, 2, 3), Error);
}

TEST_CASE("noisy boundary") {
  RootedTree t = RootedTree::bary(2, 8);
  Configuration base = broadcast_sample(t, bsc(0.1), 0, 3);

  Configuration same = noisy_boundary(base, t, bsc(0.1), 8, 0, 5);
  CHECK(same.symbols == base.symbols);

  // two applications of bsc(0.1) flip with probability (1-0.64)/2 = 0.18
  Configuration twice = noisy_boundary(base, t, bsc(0.1), 8, 2, 5);
  int flips = 0;
  for (int v : t.level(8)) flips += twice.symbols[v] != base.symbols[v];
  double n = static_cast<double>(t.level_size(8));
  CHECK(std::abs(flips - 0.18 * n) < 4 * std::sqrt(n * 0.18 * 0.82));

  // rank-one noise erases the input
  Channel flat = rank_one({0.25, 0.75});
  Configuration erased = noisy_boundary(base, t, flat, 8, 1, 5);
  int ones = 0;
  for (int v : t.level(8)) ones += erased.symbols[v] == 1;
  CHECK(std::abs(ones - 0.75 * n) < 4 * std::sqrt(n * 0.25 * 0.75));
}

TEST_CASE("noisy boundary equals broadcasting on the tail-extended tree") {
  // appending a unary path of length m below every leaf realizes the
  // boundary-noise configuration as an ordinary deeper broadcast
  const int depth = 2, m_steps = 2;
  Channel m = bsc(0.2);
  RootedTree base = RootedTree::bary(2, depth);

  std::vector<int> parents(base.parents().begin(), base.parents().end());
  std::vector<int> tips;
  for (int v : base.level(depth)) tips.push_back(v);
  for (int step = 0; step < m_steps; ++step) {
    std::vector<int> next;
    for (int tip : tips) {
      next.push_back(static_cast<int>(parents.size()));
      parents.push_back(tip);
    }
    tips = next;
  }
  RootedTree extended = RootedTree::from_parents(parents);

  auto exact_noisy = exact_level_distribution(extended, m, depth + m_steps, 0);

  // Monte Carlo side: noisy_boundary applied to the plain broadcast
  ChannelSampler sampler(m);
  Rng rng(77);
  Configuration work;
  std::vector<double> empirical(exact_noisy.size(), 0.0);
  const int n = 40'000;
  auto lv = base.level(depth);
  for (int t = 0; t < n; ++t) {
    broadcast_sample_into(base, sampler, 0, rng, work);
    Configuration noisy = noisy_boundary(work, base, m, depth, m_steps, rng.next_u64());
    std::size_t id = 0;
    for (int v : lv) id = id * 2 + static_cast<std::size_t>(noisy.symbols[v]);
    empirical[id] += 1.0 / n;
  }
  for (std::size_t id = 0; id < empirical.size(); ++id) {
    double p = exact_noisy[id];
    CHECK(std::abs(empirical[id] - p) < 4 * std::sqrt(p * (1 - p) / n) + 1e-4);
  }
}

TEST_CASE("exact census distribution at depth one") {
  auto dist = exact_census_distribution(2, 1, bsc(0.25), 0);
  REQUIRE(dist.prob.size() == 3);
  CHECK(dist.prob.at({2, 0}) == doctest::Approx(9.0 / 16).epsilon(1e-14));
  CHECK(dist.prob.at({1, 1}) == doctest::Approx(6.0 / 16).epsilon(1e-14));
  CHECK(dist.prob.at({0, 2}) == doctest::Approx(1.0 / 16).epsilon(1e-14));

  auto other = exact_census_distribution(2, 1, bsc(0.25), 1);
  CHECK(census_total_variation(dist, other) == doctest::Approx(0.5).epsilon(1e-14));

  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  auto point = exact_census_distribution(3, 4, id, 1);
  REQUIRE(point.prob.size() == 1);
  CHECK(point.prob.begin()->first == CensusVector{0, 81});

  CHECK_THROWS_AS(exact_census_distribution(2, 6, potts(4, 0.1), 0, 50), Error);
}

TEST_CASE("census moments match the matrix power") {
  for (const Channel& m : {bsc(0.3), potts(3, 0.1)}) {
    const int b = 2, depth = 4;
    for (int root = 0; root < m.size(); ++root) {
      auto dist = exact_census_distribution(b, depth, m, root);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(m.size());
      double mass = 0.0;
      for (const auto& [counts, p] : dist.prob) {
        mass += p;
        for (int s = 0; s < m.size(); ++s) mean[s] += p * counts[s];
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
      Eigen::RowVectorXd want =
          std::pow(b, depth) *
          (Eigen::RowVectorXd::Unit(m.size(), root) * iterate(m, depth).matrix());
      CHECK((mean.transpose() - want).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("exact level distribution") {
  // a path reproduces the matrix power row
  RootedTree path = RootedTree::bary(1, 4);
  Channel m = asymmetric_binary(0.15, 0.45);
  auto dist = exact_level_distribution(path, m, 4, 0);
  Eigen::MatrixXd pow4 = iterate(m, 4).matrix();
  REQUIRE(dist.size() == 2);
  CHECK(dist[0] == doctest::Approx(pow4(0, 0)).epsilon(1e-14));
  CHECK(dist[1] == doctest::Approx(pow4(0, 1)).epsilon(1e-14));

  // depth-one binary tree: product measure over two leaves
  RootedTree t1 = RootedTree::bary(2, 1);
  auto d1 = exact_level_distribution(t1, bsc(0.2), 1, 0);
  CHECK(d1[0] == doctest::Approx(0.64).epsilon(1e-14));  // (0,0)
  CHECK(d1[1] == doctest::Approx(0.16).epsilon(1e-14));  // (0,1)
  CHECK(d1[3] == doctest::Approx(0.04).epsilon(1e-14));  // (1,1)

  CHECK_THROWS_AS(exact_level_distribution(RootedTree::bary(2, 4), bsc(0.2), 4, 0, 100), Error);
}

TEST_CASE("leaf likelihood agrees with the exact joint") {
  RootedTree t = RootedTree::bary(2, 2);
  Channel m = bsc(0.2);
  auto joint = exact_level_distribution(t, m, 2, 0);
  auto lv = t.level(2);
  std::vector<int> antichain(lv.begin(), lv.end());

  Configuration config;
  config.symbols.assign(t.vertex_count(), -1);
  for (std::size_t id = 0; id < joint.size(); ++id) {
    std::size_t rem = id;
    for (std::size_t pos = antichain.size(); pos-- > 0;) {
      config.symbols[antichain[pos]] = static_cast<int>(rem % 2);
      rem /= 2;
    }
    CHECK(leaf_likelihood(t, m, config, antichain, 0) ==
          doctest::Approx(joint[id]).epsilon(1e-12));
  }

  // single-step path: the likelihood is the matrix entry
  RootedTree p1 = RootedTree::bary(1, 1);
  Configuration c1;
  c1.symbols = {-1, 1};
  std::vector<int> w = {1};
  CHECK(leaf_likelihood(p1, m, c1, w, 0) == doctest::Approx(0.2).epsilon(1e-14));

  // normalization over every configuration of a 3-vertex antichain
  RootedTree t3 = RootedTree::bary(3, 1);
  std::vector<int> w3 = {1, 2, 3};
  double total = 0.0;
  Configuration c3;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        c3.symbols = {-1, a, b, c};
        total += leaf_likelihood(t3, m, c3, w3, 1);
      }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // ancestor-descendant sets are rejected
  std::vector<int> not_antichain = {1, 3};
  Configuration cbad;
  cbad.symbols.assign(t.vertex_count(), 0);
  CHECK_THROWS_AS(leaf_likelihood(t, m, cbad, not_antichain, 0), Error);
}

TEST_CASE("monte carlo total variation") {
  RootedTree t = RootedTree::bary(2, 3);
  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  auto exact_one = mc_total_variation(t, id, 3, 0, 1, 500, 5);
  CHECK(exact_one.value == 1.0);
  CHECK(exact_one.std_error == 0.0);

  Channel flat = rank_one({0.3, 0.7});
  auto zero = mc_total_variation(t, flat, 3, 0, 1, 500, 5);
  CHECK(zero.value == 0.0);
  CHECK(zero.std_error == 0.0);

  Channel m = bsc(0.25);
  RootedTree t1 = RootedTree::bary(2, 1);
  auto est = mc_total_variation(t1, m, 1, 0, 1, 40'000, 11);
  auto p0 = exact_level_distribution(t1, m, 1, 0);
  auto p1 = exact_level_distribution(t1, m, 1, 1);
  CHECK(std::abs(est.value - total_variation(p0, p1)) <= 3 * est.std_error + 1e-12);
}

TEST_CASE("monte carlo chi-square") {
  RootedTree t = RootedTree::bary(2, 2);
  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  CHECK(mc_chi_square(t, id, 2, 0, 1, 300, 5).value == 1.0);

  Channel flat = rank_one({0.5, 0.5});
  auto zero = mc_chi_square(t, flat, 2, 0, 1, 300, 5);
  CHECK(zero.value == 0.0);
  CHECK(zero.std_error == 0.0);

  Channel m = bsc(0.25);
  auto est = mc_chi_square(t, m, 2, 0, 1, 40'000, 13);
  auto p0 = exact_level_distribution(t, m, 2, 0);
  auto p1 = exact_level_distribution(t, m, 2, 1);
  CHECK(std::abs(est.value - chi_square_distance(p0, p1)) <= 3 * est.std_error + 1e-12);
}

TEST_CASE("divergence sandwich on exact instances") {
  for (const Channel& m : {bsc(0.25), bsc(0.4), potts(3, 0.15), asymmetric_binary(0.1, 0.5)}) {
    for (int depth = 1; depth <= 3; ++depth) {
      RootedTree t = RootedTree::bary(2, depth);
      auto p0 = exact_level_distribution(t, m, depth, 0);
      auto p1 = exact_level_distribution(t, m, depth, 1);
      double tv = total_variation(p0, p1);
      double chi = chi_square_distance(p0, p1);
      CHECK(chi * chi <= tv + 1e-10);
      CHECK(tv <= chi + 1e-10);
    }
  }
}

TEST_CASE("census tv never exceeds configuration tv") {
  for (const Channel& m : {bsc(0.3), potts(3, 0.15)}) {
    for (int depth = 1; depth <= 3; ++depth) {
      RootedTree t = RootedTree::bary(2, depth);
      double config_tv = total_variation(exact_level_distribution(t, m, depth, 0),
                                         exact_level_distribution(t, m, depth, 1));
      double census_tv = census_total_variation(exact_census_distribution(2, depth, m, 0),
                                                exact_census_distribution(2, depth, m, 1));
      CHECK(census_tv <= config_tv + 1e-10);
    }
  }
}

TEST_CASE("monte carlo mutual information") {
  RootedTree t = RootedTree::bary(2, 2);
  std::vector<double> uniform = {0.5, 0.5};

  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  auto full = mc_mutual_information(t, id, 2, uniform, 200, 3);
  CHECK(full.value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(full.std_error <= 1e-12);

  Channel flat = rank_one({0.4, 0.6});
  auto none = mc_mutual_information(t, flat, 2, uniform, 200, 3);
  CHECK(none.value == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> degenerate = {1.0, 0.0};
  CHECK_THROWS_AS(mc_mutual_information(t, id, 2, degenerate, 10, 3), Error);
}

TEST_CASE("symmetric-channel information bound") {
  // for the binary symmetric channel and a uniform binary root, the
  // information in a level is at most sum_w (1-2 eps)^(2 |w|) bits
  std::vector<double> uniform = {0.5, 0.5};
  std::vector<RootedTree> trees;
  trees.push_back(RootedTree::bary(2, 3));
  trees.push_back(RootedTree::from_parents({0, 0, 0, 1, 1, 2, 3, 3, 5}));
  for (const auto& t : trees) {
    for (double eps : {0.1, 0.2, 0.3, 0.45}) {
      Channel m = bsc(eps);
      double theta = 1 - 2 * eps;
      for (int depth = 1; depth <= t.max_depth(); ++depth) {
        double info_bits = exact_mutual_information(t, m, depth, uniform) / std::log(2.0);
        double bound = static_cast<double>(t.level_size(depth)) * std::pow(theta, 2.0 * depth);
        CHECK(info_bits <= bound + 1e-10);
      }
    }
  }
}

TEST_CASE("exact mutual information decreases with depth") {
  std::vector<double> uniform = {0.5, 0.5};
  Channel m = bsc(0.3);
  double prev = std::log(2.0);
  for (int depth = 1; depth <= 4; ++depth) {
    RootedTree t = RootedTree::bary(2, depth);
    double info = exact_mutual_information(t, m, depth, uniform);
    CHECK(info <= prev + 1e-10);
    CHECK(info >= 0.0);
    prev = info;
  }
}

TEST_CASE("estimators are deterministic in the seed and thread count") {
  RootedTree t = RootedTree::bary(2, 4);
  Channel m = potts(3, 0.12);
  auto a = mc_total_variation(t, m, 4, 0, 1, 20'000, 17, 1);
  auto b = mc_total_variation(t, m, 4, 0, 1, 20'000, 17, 1);
  auto c = mc_total_variation(t, m, 4, 0, 1, 20'000, 17, 3);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  CHECK(a.value == c.value);
}

TEST_CASE("estimate json shape") {
  DivergenceEstimate e{0.25, 0.001, 1000, EstimateMethod::monte_carlo};
  CHECK(estimate_to_json(e) ==
        R"({"method":"monte_carlo","n_samples":1000,"std_error":0.001,"value":0.25})");
}
