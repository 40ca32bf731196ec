#include <cmath>
#include <complex>

#include "doctest.h"
#include "treeflow/census.hpp"
#include "treeflow/rng.hpp"

using namespace treeflow;

namespace {

std::vector<int> level_vector(const RootedTree& t, int n) {
  auto lv = t.level(n);
  return {lv.begin(), lv.end()};
}

// Random unit flow to a full level: split randomly at every vertex.
FlowAssignment random_unit_flow(const RootedTree& t, int level, Rng& rng) {
  FlowAssignment f;
  f.flow.assign(t.vertex_count(), 0.0);
  std::vector<double> inflow(t.vertex_count(), 0.0);
  inflow[t.root()] = 1.0;
  for (int d = 0; d < level; ++d) {
    for (int v : t.level(d)) {
      auto ch = t.children(v);
      double total = 0.0;
      std::vector<double> w(ch.size());
      for (auto& x : w) {
        x = 0.05 + rng.next_double();
        total += x;
      }
      for (std::size_t i = 0; i < ch.size(); ++i) {
        f.flow[ch[i]] = inflow[v] * w[i] / total;
        inflow[ch[i]] = f.flow[ch[i]];
      }
    }
  }
  return f;
}

}  // namespace

TEST_CASE("effective resistance closed forms") {
  ResistanceProfile prof{0.6};
  // series: a path of length n
  RootedTree path = RootedTree::bary(1, 5);
  double want = 0.0;
  for (int l = 1; l <= 5; ++l) want += (1 - 0.36) * std::pow(0.6, -2.0 * l);
  CHECK(effective_resistance(path, prof, level_vector(path, 5)) ==
        doctest::Approx(want).epsilon(1e-12));

  // parallel: the b children of the root
  RootedTree wide = RootedTree::bary(4, 2);
  CHECK(effective_resistance(wide, prof, level_vector(wide, 1)) ==
        doctest::Approx(prof.resistance(1) / 4).epsilon(1e-12));

  // degenerate target: the root itself
  std::vector<int> root_only = {0};
  CHECK(effective_resistance(wide, prof, root_only) == 0.0);

  // regular tree: (1 - lam^2) sum (b lam^2)^-l, bounded when b lam^2 > 1
  ResistanceProfile prof8{0.8};
  double limit = 0.0;
  for (int n = 1; n <= 10; ++n) {
    RootedTree t = RootedTree::bary(2, n);
    double formula = 0.0;
    for (int l = 1; l <= n; ++l) formula += (1 - 0.64) * std::pow(2 * 0.64, -l);
    double reff = effective_resistance(t, prof8, level_vector(t, n));
    CHECK(reff == doctest::Approx(formula).epsilon(1e-12));
    limit = (1 - 0.64) / (2 * 0.64 - 1);
    CHECK(reff < limit);
  }

  CHECK_THROWS_AS(ResistanceProfile::from_lambda(0.0), Error);
  CHECK_THROWS_AS(ResistanceProfile::from_lambda(1.0), Error);
}

TEST_CASE("minimum energy flow") {
  ResistanceProfile prof{0.6};

  // regular tree: the optimal flow is b^-|e| on every edge
  for (int b : {2, 3}) {
    RootedTree t = RootedTree::bary(b, 4);
    auto flow = min_energy_unit_flow(t, prof, level_vector(t, 4));
    for (int v = 1; v < t.vertex_count(); ++v)
      CHECK(flow.flow[v] == doctest::Approx(std::pow(b, -t.depth(v))).epsilon(1e-12));
    CHECK(flow_energy(t, prof, flow) ==
          doctest::Approx(effective_resistance(t, prof, level_vector(t, 4))).epsilon(1e-9));
  }

  // path: unit flow everywhere
  RootedTree path = RootedTree::bary(1, 4);
  auto pf = min_energy_unit_flow(path, prof, level_vector(path, 4));
  for (int v = 1; v < path.vertex_count(); ++v) CHECK(pf.flow[v] == doctest::Approx(1.0));

  // irregular tree: conservation, unit strength, optimality vs random flows
  RootedTree t = RootedTree::from_parents({0, 0, 0, 1, 1, 2, 3, 3, 3, 4, 5, 5});
  int depth = t.max_depth();
  auto target = level_vector(t, depth);
  auto flow = min_energy_unit_flow(t, prof, target);

  double out_root = 0.0;
  for (int c : t.children(t.root())) out_root += flow.flow[c];
  CHECK(out_root == doctest::Approx(1.0).epsilon(1e-10));
  for (int v = 0; v < t.vertex_count(); ++v) {
    if (v == t.root() || t.depth(v) >= depth) continue;
    double in = flow.flow[v], out = 0.0;
    bool interior = t.depth(v) < depth;
    for (int c : t.children(v)) out += flow.flow[c];
    if (interior && in > 0) CHECK(in == doctest::Approx(out).epsilon(1e-10));
  }

  double optimal = flow_energy(t, prof, flow);
  CHECK(optimal ==
        doctest::Approx(effective_resistance(t, prof, target)).epsilon(1e-9));
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep)
    CHECK(optimal <= flow_energy(t, prof, random_unit_flow(t, depth, rng)) + 1e-12);

  // no route to the target
  RootedTree two = RootedTree::from_parents({0, 0});
  std::vector<int> nothing = {};
  CHECK_THROWS_AS(effective_resistance(two, prof, nothing), Error);
}

TEST_CASE("telescoping resistance identity") {
  for (double lam : {0.3, 0.6, 0.9}) {
    ResistanceProfile prof{lam};
    RootedTree t = RootedTree::bary(2, 6);
    for (int v = 0; v < t.vertex_count(); ++v) {
      double sum = 1.0;
      for (int u = v; u != t.root(); u = t.parent(u)) sum += prof.resistance(t.depth(u));
      CHECK(std::abs(sum - std::pow(lam, -2.0 * t.depth(v))) <
            1e-10 * std::pow(lam, -2.0 * t.depth(v)));
    }
  }
}

TEST_CASE("census estimator values") {
  Channel m = bsc(0.3);
  SpectralData sd = spectral(m);
  RootedTree t = RootedTree::bary(2, 3);
  auto spec = EstimatorSpec::for_level(t, sd, 3);

  // S equals the census form (c . v) / (b^n lambda^n) on the regular tree
  Configuration c = broadcast_sample(t, m, 0, 5);
  auto counts = census_of(c, t, 2, 3);
  std::complex<double> direct = census_estimator_value(spec, c);
  std::complex<double> census_form =
      (static_cast<double>(counts[0]) * sd.v[0] + static_cast<double>(counts[1]) * sd.v[1]) /
      (std::pow(2.0, 3) * std::pow(sd.lambda2, 3));
  CHECK(std::abs(direct - census_form) < 1e-12);

  // W = {root}: the estimator reads off v[root symbol]
  auto root_spec = EstimatorSpec::for_level(t, sd, 0);
  CHECK(std::abs(census_estimator_value(root_spec, c) - sd.v[c.symbols[0]]) < 1e-15);

  // identity channel: deterministic propagation gives v[root] every time
  Channel id = Channel::from_entries(Eigen::MatrixXd::Identity(2, 2));
  SpectralData sid = spectral(id);
  auto flow = min_energy_unit_flow(t, ResistanceProfile{0.5}, level_vector(t, 3));
  auto id_spec = EstimatorSpec::make(t, sid, level_vector(t, 3), flow);
  for (int root : {0, 1}) {
    Configuration cfg = broadcast_sample(t, id, root, 11);
    CHECK(std::abs(census_estimator_value(id_spec, cfg) - sid.v[root]) < 1e-12);
  }

  // rank-one channels have no estimator
  Eigen::MatrixXd flat(2, 2);
  flat << 0.5, 0.5, 0.5, 0.5;
  SpectralData szero = spectral(Channel::from_entries(flat));
  CHECK_THROWS_AS(EstimatorSpec::make(t, szero, level_vector(t, 3), flow), Error);
}

TEST_CASE("estimator moments") {
  Channel m = bsc(0.2);
  SpectralData sd = spectral(m);
  RootedTree t = RootedTree::bary(2, 4);
  auto spec = EstimatorSpec::for_level(t, sd, 4);
  auto moments = estimator_moments_mc(t, m, spec, 0, 40'000, 19);

  CHECK(std::abs(moments.mean - sd.v[0]) <= 3 * moments.mean_std_error + 1e-9);
  double reff = effective_resistance(t, ResistanceProfile::from_lambda(sd.lambda2),
                                     level_vector(t, 4));
  CHECK(moments.second_moment <= 1 + reff + 3 * moments.second_moment_std_error);
  CHECK(moments.n_samples == 40'000);
}

TEST_CASE("chi-square lower bound") {
  Channel m = bsc(0.2);
  RootedTree t = RootedTree::bary(2, 3);
  auto bound = chi_square_lower_bound(m, t, 3);
  CHECK(bound.value > 0.0);
  CHECK(bound.i == 0);
  CHECK(bound.j == 1);

  // the exact squared chi-square distance dominates the bound
  auto p0 = exact_level_distribution(t, m, 3, 0);
  auto p1 = exact_level_distribution(t, m, 3, 1);
  double chi = chi_square_distance(p0, p1);
  CHECK(chi * chi >= bound.value - 1e-12);

  // supercritical: the bound stays away from zero as depth grows
  Channel strong = bsc(0.1);  // b lam^2 = 1.28 on the binary tree
  double lowest = 1.0;
  for (int depth = 1; depth <= 8; ++depth) {
    RootedTree td = RootedTree::bary(2, depth);
    lowest = std::min(lowest, chi_square_lower_bound(strong, td, depth).value);
  }
  CHECK(lowest > 0.05);

  // the maximizing pair has positive spread for potts
  auto pb = chi_square_lower_bound(potts(3, 0.1), t, 2);
  CHECK(pb.value > 0.0);

  Eigen::MatrixXd flat(2, 2);
  flat << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(chi_square_lower_bound(Channel::from_entries(flat), t, 2), Error);
}
