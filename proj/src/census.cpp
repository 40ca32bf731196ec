#include "treeflow/census.hpp"
#include <memory>

#include <cmath>

#include "mc.hpp"

namespace treeflow {

ResistanceProfile ResistanceProfile::from_lambda(std::complex<double> lambda) {
  double mag = std::abs(lambda);
  require(mag > 0.0, Errc::zero_lambda, "|lambda| must be positive");
  require(mag < 1.0, Errc::out_of_range, "|lambda| must be below 1");
  return ResistanceProfile{mag};
}

namespace {

struct SeriesParallel {
  std::vector<char> in_w;
  std::vector<char> reaches;
  std::vector<double> r_sub;  // effective resistance of v's subtree down to W

  SeriesParallel(const RootedTree& tree, const ResistanceProfile& profile,
                 std::span<const int> antichain) {
    require(is_antichain(tree, antichain), Errc::incomplete_antichain,
            "target set is not an antichain");
    const int n = tree.vertex_count();
    in_w.assign(n, 0);
    for (int v : antichain) in_w[v] = 1;
    reaches.assign(n, 0);
    r_sub.assign(n, 0.0);
    for (int d = tree.max_depth(); d >= 0; --d) {
      for (int v : tree.level(d)) {
        if (in_w[v]) {
          reaches[v] = 1;
          r_sub[v] = 0.0;
          continue;
        }
        double conductance = 0.0;
        for (int c : tree.children(v)) {
          if (!reaches[c]) continue;
          conductance += 1.0 / (profile.resistance(tree.depth(c)) + r_sub[c]);
        }
        if (conductance > 0.0) {
          reaches[v] = 1;
          r_sub[v] = 1.0 / conductance;
        }
      }
    }
    require(reaches[tree.root()], Errc::unreachable, "no path from the root to the antichain");
  }
};

}  // namespace

double effective_resistance(const RootedTree& tree, const ResistanceProfile& profile,
                            std::span<const int> antichain) {
  return SeriesParallel(tree, profile, antichain).r_sub[tree.root()];
}

FlowAssignment min_energy_unit_flow(const RootedTree& tree, const ResistanceProfile& profile,
                                    std::span<const int> antichain) {
  SeriesParallel sp(tree, profile, antichain);
  FlowAssignment out;
  out.flow.assign(tree.vertex_count(), 0.0);
  std::vector<double> inflow(tree.vertex_count(), 0.0);
  inflow[tree.root()] = 1.0;
  for (int d = 0; d < tree.max_depth(); ++d) {
    for (int v : tree.level(d)) {
      double supply = inflow[v];
      if (supply == 0.0 || sp.in_w[v]) continue;  // antichain members absorb
      double conductance = 0.0;
      for (int c : tree.children(v))
        if (sp.reaches[c]) conductance += 1.0 / (profile.resistance(tree.depth(c)) + sp.r_sub[c]);
      for (int c : tree.children(v)) {
        if (!sp.reaches[c]) continue;
        double share =
            supply * (1.0 / (profile.resistance(tree.depth(c)) + sp.r_sub[c])) / conductance;
        out.flow[c] = share;
        inflow[c] = share;
      }
    }
  }
  return out;
}

double flow_energy(const RootedTree& tree, const ResistanceProfile& profile,
                   const FlowAssignment& flow) {
  double energy = 0.0;
  for (int v = 0; v < tree.vertex_count(); ++v) {
    if (v == tree.root() || flow.flow[v] == 0.0) continue;
    energy += profile.resistance(tree.depth(v)) * flow.flow[v] * flow.flow[v];
  }
  return energy;
}

EstimatorSpec EstimatorSpec::make(const RootedTree& tree, const SpectralData& spec,
                                  std::vector<int> antichain, FlowAssignment flow) {
  require(std::abs(spec.lambda2) > 0.0, Errc::zero_lambda,
          "estimator undefined for lambda2 = 0");
  require(is_antichain(tree, antichain), Errc::incomplete_antichain,
          "target set is not an antichain");
  EstimatorSpec out;
  out.antichain_ = std::move(antichain);
  out.flow_ = std::move(flow);
  out.lambda_ = spec.lambda2;
  out.v_ = spec.v;
  out.coeff_.reserve(out.antichain_.size());
  for (int x : out.antichain_) {
    double mu = x == tree.root() ? 1.0 : out.flow_.flow[x];
    std::complex<double> denom = std::pow(out.lambda_, tree.depth(x));
    out.coeff_.push_back(mu / denom);
  }
  return out;
}

EstimatorSpec EstimatorSpec::for_level(const RootedTree& tree, const SpectralData& spec,
                                       int level) {
  auto lv = tree.level(level);
  std::vector<int> antichain(lv.begin(), lv.end());
  FlowAssignment flow;
  if (level == 0) {
    flow.flow.assign(tree.vertex_count(), 0.0);
  } else {
    flow = min_energy_unit_flow(tree, ResistanceProfile::from_lambda(spec.lambda2), antichain);
  }
  return make(tree, spec, std::move(antichain), std::move(flow));
}

std::complex<double> census_estimator_value(const EstimatorSpec& spec,
                                            const Configuration& config) {
  std::complex<double> acc = 0.0;
  const int k = static_cast<int>(spec.v().size());
  for (std::size_t t = 0; t < spec.antichain().size(); ++t) {
    int x = spec.antichain()[t];
    int s = config.symbols[x];
    if (s < 0 || s >= k)
      fail(Errc::incomplete_antichain,
           "configuration does not cover vertex " + std::to_string(x));
    acc += spec.coefficient(t) * spec.v()[s];
  }
  return acc;
}

MomentsEstimate estimator_moments_mc(const RootedTree& tree, const Channel& m,
                                     const EstimatorSpec& spec, int root_symbol,
                                     std::int64_t samples, std::uint64_t seed, int threads) {
  require(samples >= 1, Errc::out_of_range, "samples must be >= 1");
  require(root_symbol >= 0 && root_symbol < m.size(), Errc::out_of_range, "root symbol");
  auto stats = mc::run_multi<3>(samples, seed, threads, mc::kDefaultBatch, [&] {
    auto sampler = std::make_shared<ChannelSampler>(m);
    auto config = std::make_shared<Configuration>();
    return [&tree, &spec, sampler, config, root_symbol](Rng& rng) {
      broadcast_sample_into(tree, *sampler, root_symbol, rng, *config);
      std::complex<double> s = census_estimator_value(spec, *config);
      return std::array<double, 3>{s.real(), s.imag(), std::norm(s)};
    };
  });
  MomentsEstimate out;
  out.mean = {stats.mean(0), stats.mean(1)};
  out.mean_std_error = std::sqrt(stats.variance(0) / stats.n + stats.variance(1) / stats.n);
  out.second_moment = stats.mean(2);
  out.second_moment_std_error = stats.std_error(2);
  out.n_samples = stats.n;
  return out;
}

ChiSquareBound chi_square_lower_bound(const Channel& m, const RootedTree& tree, int level) {
  SpectralData spec = spectral(m);
  require(spec.lambda_abs() > 0.0, Errc::zero_lambda, "bound undefined for lambda2 = 0");
  ChiSquareBound out;
  const int k = m.size();
  double best = -1.0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      double d = std::abs(spec.v[i] - spec.v[j]);
      if (d > best) {
        best = d;
        out.i = i;
        out.j = j;
      }
    }
  auto lv = tree.level(level);
  std::vector<int> antichain(lv.begin(), lv.end());
  out.effective_resistance =
      level == 0 ? 0.0
                 : effective_resistance(tree, ResistanceProfile::from_lambda(spec.lambda2),
                                        antichain);
  out.value = best * best / (4.0 * (1.0 + out.effective_resistance));
  return out;
}

}  // namespace treeflow
