#pragma once

#include <complex>

#include "treeflow/broadcast.hpp"

namespace treeflow {

/// Edge resistances R(e) = (1 - |lambda|^2) |lambda|^{-2|e|}, where |e| is
/// the depth of the child endpoint. Strictly increasing in depth, so the
/// telescoping identity |lambda|^{-2|u|} = 1 + sum of R along the root
/// path holds exactly.
struct ResistanceProfile {
  double lambda_abs = 0.0;  // in (0,1)

  double resistance(int edge_depth) const {
    return (1.0 - lambda_abs * lambda_abs) * std::pow(lambda_abs, -2.0 * edge_depth);
  }

  static ResistanceProfile from_lambda(std::complex<double> lambda);
};

/// Flow values indexed by child vertex id: flow[v] is the flow on the
/// edge (parent(v), v). The root carries no entry.
struct FlowAssignment {
  std::vector<double> flow;
};

/// Effective resistance between the root and the antichain W by
/// series-parallel reduction; branches not reaching W contribute zero
/// conductance. W = {root} gives 0.
double effective_resistance(const RootedTree& tree, const ResistanceProfile& profile,
                            std::span<const int> antichain);

/// The unit flow from the root to W minimizing sum_e R(e) mu(e)^2
/// (Thomson's principle): split at every vertex proportionally to branch
/// conductance. Its energy equals the effective resistance.
FlowAssignment min_energy_unit_flow(const RootedTree& tree, const ResistanceProfile& profile,
                                    std::span<const int> antichain);

double flow_energy(const RootedTree& tree, const ResistanceProfile& profile,
                   const FlowAssignment& flow);

/// Linear census estimator S = sum_{x in W} mu(x) v[sigma_x] / lambda^{|x|},
/// unbiased for e_root . v.
class EstimatorSpec {
 public:
  /// Throws zero_lambda when |lambda2| = 0 (rank-one channels have no
  /// usable estimator).
  static EstimatorSpec make(const RootedTree& tree, const SpectralData& spec,
                            std::vector<int> antichain, FlowAssignment flow);

  /// Convenience: W = level n with the minimum-energy flow.
  static EstimatorSpec for_level(const RootedTree& tree, const SpectralData& spec, int level);

  const std::vector<int>& antichain() const { return antichain_; }
  const FlowAssignment& flow() const { return flow_; }
  std::complex<double> lambda() const { return lambda_; }
  const Eigen::VectorXcd& v() const { return v_; }

  /// mu(x) / lambda^{|x|}.
  std::complex<double> coefficient(std::size_t antichain_pos) const { return coeff_[antichain_pos]; }

 private:
  std::vector<int> antichain_;
  FlowAssignment flow_;
  std::complex<double> lambda_;
  Eigen::VectorXcd v_;
  std::vector<std::complex<double>> coeff_;
};

std::complex<double> census_estimator_value(const EstimatorSpec& spec, const Configuration& config);

struct MomentsEstimate {
  std::complex<double> mean;
  double mean_std_error = 0.0;           // sqrt((var Re + var Im) / n)
  double second_moment = 0.0;            // E |S|^2
  double second_moment_std_error = 0.0;
  std::int64_t n_samples = 0;
};

MomentsEstimate estimator_moments_mc(const RootedTree& tree, const Channel& m,
                                     const EstimatorSpec& spec, int root_symbol,
                                     std::int64_t samples, std::uint64_t seed, int threads = 1);

struct ChiSquareBound {
  double value = 0.0;  // tilde_c^2 / (4 (1 + R_eff))
  int i = 0, j = 0;    // pair attaining tilde_c
  double effective_resistance = 0.0;
};

/// Lower bound on the squared chi-square distance between the level-n
/// conditional distributions for the best state pair.
ChiSquareBound chi_square_lower_bound(const Channel& m, const RootedTree& tree, int level);

}  // namespace treeflow
