#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "treeflow/census.hpp"
#include "treeflow/distinguish.hpp"
#include "treeflow/experiment.hpp"
#include "treeflow/fieldshare.hpp"
#include "treeflow/reconstruct.hpp"

namespace treeflow {

namespace {

// Frozen regression values for the exact census total variation on the
// binary tree (root 0 vs root 1), pinned from the census recursion.
constexpr double kCensusTvEps005Depth6 = 0.8749745617086598;  // bsc(0.05), depth 6
constexpr double kCensusTvEps035[6] = {0.30000000000000004, 0.13095000000000012,
                                       0.056642630062500005, 0.024278568703366823,
                                       0.010355163730887924, 0.004405159357912568};

struct Gate {
  bool ok = true;
  std::ostringstream out;

  void note(const std::string& label, double value) {
    out << label << "=" << format_double(value) << " ";
  }
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      out << "[violated: " << what << "] ";
    }
  }
};

struct CheckContext {
  VerifyLevel level;
  int threads;
  const FaultInjection* fault;

  std::int64_t samples(std::int64_t full) const {
    return level == VerifyLevel::full ? full : std::min<std::int64_t>(full, 20'000);
  }
  std::int64_t trials(std::int64_t full) const {
    return level == VerifyLevel::full ? full : std::min<std::int64_t>(full, 100);
  }
};

using CheckFn = std::function<void(const CheckContext&, Gate&)>;

double rel_diff(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-30});
  return std::abs(a - b) / scale;
}

// ---- stochasticity (plus the fault-injection negative control) --------------

void check_stochasticity(const CheckContext& ctx, Gate& g) {
  std::vector<Eigen::MatrixXd> mats;
  mats.push_back(bsc(0.17).matrix());
  mats.push_back(asymmetric_binary(0.12, 0.55).matrix());
  mats.push_back(potts(4, 0.2).matrix());
  mats.push_back(coloring(5).matrix());
  mats.push_back(runlength_channel(0.3, 3).matrix());
  mats.push_back(shift_channel(0.4, 2).matrix());
  mats.push_back(
      fieldshare::materialize_channel(fieldshare::ShareChannelSpec::make(5, 2)).matrix());
  if (ctx.fault && ctx.fault->corrupt_stochasticity) mats.front()(0, 0) += 0.1;

  double worst = 0.0;
  double most_negative = 0.0;
  for (const auto& m : mats) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      worst = std::max(worst, std::abs(m.row(i).sum() - 1.0));
      most_negative = std::min(most_negative, m.row(i).minCoeff());
    }
  }
  g.note("max_row_sum_error", worst);
  g.expect(worst <= 1e-12, "row sums within 1e-12 of 1");
  g.expect(most_negative >= 0.0, "nonnegative entries");
}

// ---- criterion 1: spectral facts --------------------------------------------

void check_spectral_facts(const CheckContext&, Gate& g) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    double eps = 0.05 * t;
    worst = std::max(worst, std::abs(spectral(bsc(eps)).lambda2 - std::complex<double>(1 - 2 * eps)));
  }
  for (int q : {3, 4, 5, 6, 7}) {
    for (int t = 1; t <= 4; ++t) {
      double delta = 0.2 * t / (q - 1);
      worst = std::max(worst,
                       std::abs(spectral(potts(q, delta)).lambda2 - std::complex<double>(1 - q * delta)));
    }
  }
  for (int t = 0; t < 20; ++t) {
    double d1 = 0.02 + 0.04 * t;
    double d2 = 0.97 - 0.03 * t;
    worst = std::max(worst, std::abs(spectral(asymmetric_binary(d1, d2)).lambda2 -
                                     std::complex<double>(d2 - d1)));
  }
  for (int q = 2; q <= 21; ++q) {
    worst = std::max(worst, std::abs(spectral(coloring(q)).lambda2 -
                                     std::complex<double>(-1.0 / (q - 1))));
  }
  g.note("max_eigenvalue_error", worst);
  g.expect(worst <= 1e-10, "family eigenvalues within 1e-10 of the closed forms");
}

// ---- criterion 2: decomposition bounds ---------------------------------------

void check_decomposition_bounds(const CheckContext&, Gate& g) {
  const int b = 2;
  double worst = 0.0;
  for (int q : {3, 4, 5}) {
    for (int t = 1; t <= 8; ++t) {
      double delta = 0.11 * t / (q - 1);
      if ((q - 1) * delta > 1.0) continue;
      auto dec = two_state_decomposition(potts(q, delta), 0, 1);
      double want = b * (1 - q * delta) * (1 - q * delta) / (1 - (q - 2) * delta);
      worst = std::max(worst, std::abs(dec.bound(b) - want));
    }
  }
  for (int t = 0; t < 10; ++t) {
    double d1 = 0.03 + 0.04 * t;
    double d2 = 0.9 - 0.05 * t;
    if (d1 + d2 > 1.0) continue;
    auto dec = two_state_decomposition(asymmetric_binary(d1, d2), 0, 1);
    double want = b * (d2 - d1) * (d2 - d1) / (d2 + d1);
    worst = std::max(worst, std::abs(dec.bound(b) - want));
  }
  g.note("max_bound_error", worst);
  g.expect(worst <= 1e-10, "decomposition bounds match the family formulas");
}

// ---- criterion 3: indistinguishability examples --------------------------------

void check_indistinguishability(const CheckContext&, Gate& g) {
  Channel rl = runlength_channel(0.5, 2);
  auto rl_part = indistinguishability_partition(rl);
  g.expect(rl_part.block_count() == 3, "run-length states all distinguishable");
  double rl_lambda = spectral(rl).lambda_abs();
  g.note("runlength_lambda2", rl_lambda);
  g.expect(rl_lambda <= 1e-8, "run-length lambda2 = 0");
  Eigen::MatrixXd cube = iterate(rl, 3).matrix();
  double rank_defect = 0.0;
  for (int i = 1; i < cube.rows(); ++i)
    rank_defect = std::max(rank_defect, (cube.row(i) - cube.row(0)).lpNorm<Eigen::Infinity>());
  g.note("cube_row_spread", rank_defect);
  g.expect(rank_defect <= 1e-12, "M^3 has identical rows (rank 1)");

  Channel sh = shift_channel(0.5, 1);
  auto sh_part = indistinguishability_partition(sh);
  g.expect(sh_part.block_count() == 1, "shift-channel states all indistinguishable");
  double sh_lambda = spectral(sh).lambda_abs();
  g.note("shift_lambda2", sh_lambda);
  g.expect(sh_lambda <= 1e-8, "shift lambda2 = 0");
}

// ---- criterion 4: oracle equivalence -------------------------------------------

void check_oracle_equivalence(const CheckContext& ctx, Gate& g) {
  std::int64_t samples = ctx.samples(100'000);
  std::uint64_t seed = 41;
  for (const Channel& m : {bsc(0.25), potts(3, 0.15)}) {
    for (int depth = 1; depth <= 3; ++depth) {
      RootedTree tree = RootedTree::bary(2, depth);
      auto p0 = exact_level_distribution(tree, m, depth, 0);
      auto p1 = exact_level_distribution(tree, m, depth, 1);
      double tv = total_variation(p0, p1);
      double chi = chi_square_distance(p0, p1);
      auto est = mc_total_variation(tree, m, depth, 0, 1, samples, seed++, ctx.threads);
      g.expect(std::abs(est.value - tv) <= 3.0 * est.std_error + 1e-12,
               "mc tv within 3 std errors of the exact value (k=" + std::to_string(m.size()) +
                   ", depth " + std::to_string(depth) + ")");
      g.expect(chi * chi <= tv + 1e-10 && tv <= chi + 1e-10,
               "chi-square sandwich at depth " + std::to_string(depth));
    }
  }
}

// ---- criterion 5: census estimator ----------------------------------------------

void check_census_estimator(const CheckContext& ctx, Gate& g) {
  std::int64_t samples = ctx.samples(100'000);
  const Channel m = bsc(0.2);
  SpectralData sd = spectral(m);
  std::uint64_t seed = 57;
  for (int b : {2, 3}) {
    RootedTree tree = RootedTree::bary(b, 6);
    auto spec = EstimatorSpec::for_level(tree, sd, 6);
    double flow_err = 0.0;
    for (int v = 1; v < tree.vertex_count(); ++v)
      flow_err = std::max(flow_err,
                          std::abs(spec.flow().flow[v] - std::pow(b, -tree.depth(v))));
    g.note("b" + std::to_string(b) + "_flow_error", flow_err);
    g.expect(flow_err <= 1e-12, "optimal flow is b^-|e| on the regular tree");

    auto lv = tree.level(6);
    double reff = effective_resistance(tree, ResistanceProfile::from_lambda(sd.lambda2),
                                       std::vector<int>(lv.begin(), lv.end()));
    auto moments = estimator_moments_mc(tree, m, spec, 0, samples, seed++, ctx.threads);
    double mean_err = std::abs(moments.mean - sd.v[0]);
    g.note("b" + std::to_string(b) + "_mean_error", mean_err);
    g.expect(mean_err <= 3.0 * moments.mean_std_error + 1e-9, "estimator mean matches v[root]");
    g.note("b" + std::to_string(b) + "_second_moment", moments.second_moment);
    g.expect(moments.second_moment <=
                 1.0 + reff + 3.0 * moments.second_moment_std_error,
             "E|S|^2 within 1 + R_eff");
  }
}

// ---- criterion 6: census tv at depth 6 --------------------------------------------

void check_census_tv_trend(const CheckContext&, Gate& g) {
  auto census_tv = [](double eps, int depth) {
    Channel m = bsc(eps);
    return census_total_variation(exact_census_distribution(2, depth, m, 0),
                                  exact_census_distribution(2, depth, m, 1));
  };
  double strong = census_tv(0.05, 6);
  g.note("tv_eps005_depth6", strong);
  g.expect(strong > 0.5, "supercritical census tv stays above 1/2 at depth 6");
  g.expect(std::abs(strong - kCensusTvEps005Depth6) <= 1e-9, "frozen value, eps=0.05");

  double prev = 1.0;
  for (int depth = 1; depth <= 6; ++depth) {
    double tv = census_tv(0.35, depth);
    if (depth == 6) g.note("tv_eps035_depth6", tv);
    g.expect(tv <= prev + 1e-12, "subcritical census tv decreasing in depth");
    g.expect(std::abs(tv - kCensusTvEps035[depth - 1]) <= 1e-9,
             "frozen value, eps=0.35 depth " + std::to_string(depth));
    prev = tv;
  }
  g.expect(prev < 0.05, "subcritical census tv below 0.05 by depth 6");
}

// ---- criterion 7: secret sharing suite ----------------------------------------------

void check_secret_sharing(const CheckContext&, Gate& g) {
  auto spec = fieldshare::ShareChannelSpec::make(5, 2, {1, 2, 3});

  bool bijection = true;
  for (std::int64_t fi = 0; fi < spec.state_count(); ++fi) {
    auto f = fieldshare::poly_from_index(spec, fi);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pts;
    for (std::uint32_t x : spec.points) pts.emplace_back(x, fieldshare::eval_poly(f, {x, spec.q}));
    if (!(fieldshare::interpolate(spec.q, pts) == f)) bijection = false;
  }
  g.expect(bijection, "interpolation inverts evaluation on all 125 polynomials");

  auto report = fieldshare::verify_zero_boundary_information(spec);
  g.note("zero_boundary_discrepancy", report.max_discrepancy);
  g.note("exact_mi", report.mutual_information);
  g.expect(report.max_discrepancy <= 1e-12, "leaf law independent of the root");
  g.expect(report.coefficients_uniform, "non-constant output coefficients uniform");

  auto counts = fieldshare::pair_counts(spec);
  std::int64_t diag = counts.n[0][0], off = counts.n[0][1], total = 0;
  bool invariant = true;
  for (std::uint32_t a = 0; a < spec.q; ++a)
    for (std::uint32_t bb = 0; bb < spec.q; ++bb) {
      total += counts.n[a][bb];
      if (a == bb && counts.n[a][bb] != diag) invariant = false;
      if (a != bb && counts.n[a][bb] != off) invariant = false;
    }
  g.note("n_diag", static_cast<double>(diag));
  g.note("n_off", static_cast<double>(off));
  g.expect(invariant, "pair counts constant on and off the diagonal");
  g.expect(diag > off, "strict diagonal gap");
  g.expect(total == 750, "pair count total q^(b+1) (b+1)!");
  g.expect(diag == 50 && off == 25, "frozen pair counts");

  auto orbits = fieldshare::orbit_partition(spec);
  auto indist = indistinguishability_partition(fieldshare::materialize_channel(spec));
  g.note("orbit_count", orbits.block_count());
  g.expect(orbits == indist, "orbits coincide with the indistinguishability classes");
}

// ---- criterion 8: share-channel reconstruction ------------------------------------------

void check_share_reconstruction(const CheckContext& ctx, Gate& g) {
  auto spec = fieldshare::ShareChannelSpec::make(5, 2, {1, 2, 3});
  auto report = fieldshare::verify_zero_boundary_information(spec);
  g.note("two_level_mi", report.mutual_information);
  g.expect(report.mutual_information <= 1e-10, "two-level mutual information is zero");

  Channel m = fieldshare::materialize_channel(spec);
  Channel quotient = lump(m, fieldshare::orbit_partition(spec));
  RootedTree tree = RootedTree::bary(4096, 2);
  std::int64_t trials = ctx.trials(1000);
  auto est = mc_reconstruction_success(tree, quotient, trials, 83, ctx.threads);
  g.note("success_rate", est.value);
  g.note("trials", static_cast<double>(est.n_samples));
  g.expect(est.value >= 0.9 - 3.0 * est.std_error, "orbit reconstruction succeeds at B=4096");
}

// ---- criterion 9: determinism -----------------------------------------------------------

void check_determinism(const CheckContext& ctx, Gate& g) {
  Channel m = bsc(0.2);
  RootedTree tree = RootedTree::bary(2, 4);
  std::int64_t samples = ctx.samples(20'000);

  auto tv1 = mc_total_variation(tree, m, 4, 0, 1, samples, 7, 1);
  auto tv2 = mc_total_variation(tree, m, 4, 0, 1, samples, 7, 1);
  auto tv_threaded = mc_total_variation(tree, m, 4, 0, 1, samples, 7, std::max(2, ctx.threads));
  g.note("tv_repeat_rel", rel_diff(tv1.value, tv2.value));
  g.expect(rel_diff(tv1.value, tv2.value) <= 1e-9, "repeated run reproduces the tv estimate");
  g.expect(rel_diff(tv1.value, tv_threaded.value) <= 1e-9, "thread count does not change values");

  SpectralData sd = spectral(m);
  auto espec = EstimatorSpec::for_level(tree, sd, 4);
  auto m1 = estimator_moments_mc(tree, m, espec, 0, samples, 11, 1);
  auto m2 = estimator_moments_mc(tree, m, espec, 0, samples, 11, std::max(2, ctx.threads));
  g.expect(std::abs(m1.mean - m2.mean) <= 1e-9 * std::max(1.0, std::abs(m1.mean)),
           "estimator mean reproducible");
  g.expect(rel_diff(m1.second_moment, m2.second_moment) <= 1e-9,
           "estimator second moment reproducible");

  auto c1 = exact_census_distribution(2, 5, m, 0);
  auto c2 = exact_census_distribution(2, 5, m, 0);
  g.expect(c1.prob == c2.prob, "exact census recursion bit-identical");

  auto conf1 = broadcast_sample(tree, m, 0, 99);
  auto conf2 = broadcast_sample(tree, m, 0, 99);
  g.expect(conf1.symbols == conf2.symbols, "broadcast sample bit-identical");

  auto r1 = mc_reconstruction_success(tree, m, 2000, 13, 1);
  auto r2 = mc_reconstruction_success(tree, m, 2000, 13, std::max(2, ctx.threads));
  g.expect(r1.value == r2.value, "reconstruction success rate reproducible");
}

}  // namespace

std::vector<CheckResult> run_acceptance_checks(VerifyLevel level, int threads,
                                               const std::string& only,
                                               const FaultInjection* fault) {
  const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"stochasticity", check_stochasticity},
      {"criterion-1-spectral-facts", check_spectral_facts},
      {"criterion-2-decomposition-bounds", check_decomposition_bounds},
      {"criterion-3-indistinguishability", check_indistinguishability},
      {"criterion-4-oracle-equivalence", check_oracle_equivalence},
      {"criterion-5-census-estimator", check_census_estimator},
      {"criterion-6-census-tv-trend", check_census_tv_trend},
      {"criterion-7-secret-sharing", check_secret_sharing},
      {"criterion-8-share-reconstruction", check_share_reconstruction},
      {"criterion-9-determinism", check_determinism},
  };

  // Runtime budgets are part of the criteria.
  const std::map<std::string, double> limits = {
      {"criterion-1-spectral-facts", 1.0},    {"criterion-2-decomposition-bounds", 1.0},
      {"criterion-3-indistinguishability", 1.0}, {"criterion-4-oracle-equivalence", 30.0},
      {"criterion-5-census-estimator", 60.0}, {"criterion-6-census-tv-trend", 30.0},
      {"criterion-7-secret-sharing", 60.0},   {"criterion-8-share-reconstruction", 600.0},
  };

  CheckContext ctx{level, threads, fault};
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : checks) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    Gate gate;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn(ctx, gate);
    } catch (const std::exception& e) {
      gate.ok = false;
      gate.out << "[exception: " << e.what() << "]";
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (auto it = limits.find(name); it != limits.end() && wall > it->second) {
      gate.ok = false;
      gate.out << "[violated: runtime " << format_double(wall) << "s over the "
               << format_double(it->second) << "s budget] ";
    }
    results.push_back({name, gate.ok, gate.out.str(), wall});
  }
  return results;
}

}  // namespace treeflow
