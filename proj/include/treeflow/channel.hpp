#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "treeflow/errors.hpp"
#include "treeflow/partition.hpp"

namespace treeflow {

inline constexpr double kRowSumSlack = 1e-9;   // rows renormalized if this close to 1
inline constexpr double kLumpTol = 1e-12;      // row agreement tolerance for lumping/merging
inline constexpr int kDefaultAlphabetCap = 4096;

/// Row-stochastic transition matrix on a finite alphabet {0..k-1}.
/// Immutable after construction; entries validated (nonnegative, rows
/// summing to 1 after at most a 1e-9 renormalization).
class Channel {
 public:
  static Channel from_entries(Eigen::MatrixXd entries);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::VectorXd row(int i) const { return m_.row(i).transpose(); }

  bool operator==(const Channel& other) const { return m_ == other.m_; }

 private:
  explicit Channel(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

// ---- channel families ------------------------------------------------------

/// Binary symmetric channel [[1-eps, eps], [eps, 1-eps]].
Channel bsc(double eps);

/// Asymmetric binary channel [[1-d1, d1], [1-d2, d2]].
Channel asymmetric_binary(double d1, double d2);

/// q-state symmetric channel: diagonal 1-(q-1)*delta, off-diagonal delta.
Channel potts(int q, double delta);

/// Proper-coloring channel: zero diagonal, off-diagonal 1/(q-1).
Channel coloring(int q);

/// Sliding-window channel on bit-tuples (z_0,...,z_h): the window shifts
/// left and a fresh bit enters at the high end, 0 with probability p.
/// States are encoded little-endian (bit t of the state id is z_t).
Channel shift_channel(double p, int h, int alphabet_cap = kDefaultAlphabetCap);

/// Leading-ones run-length chain on {0..h}: state j >= 1 counts down
/// deterministically (last state h resamples the capped tail), state 0
/// redraws the full run distribution (p, p(1-p), ..., (1-p)^h).
Channel runlength_channel(double p, int h);

/// Matrix power M^h (h = 0 gives the identity).
Channel iterate(const Channel& m, int h);

/// Quotient channel over the blocks of `part`. Requires the strong
/// (Dynkin) lumpability condition: for every block pair the block-summed
/// row must not depend on the representative (tolerance `tol`).
Channel lump(const Channel& m, const AlphabetPartition& part, double tol = kLumpTol);

// ---- spectral analysis -----------------------------------------------------

struct SpectralData {
  std::complex<double> lambda2;  // second largest eigenvalue by |.|
  Eigen::VectorXcd v;            // unit right eigenvector for lambda2
  Eigen::VectorXd pi;            // stationary distribution (pi M = pi, sum 1)
  double tilde_c = 0.0;          // max_{i,j} |v_i - v_j|

  double lambda_abs() const { return std::abs(lambda2); }
};

/// Dense eigensolve. lambda2 tie-breaking: largest |.|, then largest real
/// part, then largest imaginary part; v is phase-fixed so its first
/// nonzero coordinate is real positive.
SpectralData spectral(const Channel& m);

// ---- two-state decomposition -----------------------------------------------

/// Decomposition of the (i,j) 2x2 block as alpha*BSC(epsilon) plus the
/// rank-one rows (beta, gamma), chosen to minimize alpha*(1-2*epsilon)^2.
struct TwoStateDecomposition {
  int i = 0, j = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool degenerate = false;  // block rows equal (Delta = 0)

  double bound(double branching) const {
    double t = 1.0 - 2.0 * epsilon;
    return branching * alpha * t * t;
  }
};

/// Requires M_{i,k} = M_{j,k} for all k outside {i,j} (tolerance 1e-12),
/// otherwise throws off_block_mismatch.
TwoStateDecomposition two_state_decomposition(const Channel& m, int i, int j);

// ---- threshold classification ----------------------------------------------

enum class ThresholdSide { below, critical, above };

struct ThresholdReport {
  double kesten_stigum_value = 0.0;  // b * |lambda2|^2
  ThresholdSide kesten_stigum = ThresholdSide::below;
  // Family-specific non-reconstruction bound values, present when the
  // matrix is structurally a symmetric q-state or 2x2 channel.
  std::optional<double> potts_bound;  // b (1-q d)^2 / (1-(q-2) d)
  std::optional<double> asym_bound;   // b (d2-d1)^2 / (d2+d1)
};

ThresholdReport classify_thresholds(const Channel& m, int b);

const char* threshold_side_name(ThresholdSide side);

// ---- serialization ---------------------------------------------------------

/// JSON object {"k": int, "entries": [[...]]}, row-major, shortest
/// round-trip decimals.
std::string channel_to_json(const Channel& m);

/// Accepts either {"k":..,"entries":..} or a family spec such as
/// {"family":"potts","q":3,"delta":0.1}.
Channel channel_from_json(const std::string& text);

std::string partition_to_json(const AlphabetPartition& p);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

}  // namespace treeflow
