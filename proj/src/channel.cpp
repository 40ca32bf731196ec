#include "treeflow/channel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace treeflow {

namespace {

void validate_probability(double p, const char* name) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, Errc::out_of_range,
          std::string(name) + " must lie in [0,1]");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Channel Channel::from_entries(Eigen::MatrixXd entries) {
  require(entries.rows() == entries.cols(), Errc::non_stochastic, "matrix must be square");
  require(entries.rows() >= 1, Errc::out_of_range, "alphabet must be nonempty");
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      double e = entries(i, j);
      require(std::isfinite(e) && e >= 0.0, Errc::negative_entry,
              "entry (" + std::to_string(i) + "," + std::to_string(j) + ") negative or non-finite");
      sum += e;
    }
    require(std::abs(sum - 1.0) <= kRowSumSlack, Errc::non_stochastic,
            "row " + std::to_string(i) + " sums to " + format_double(sum));
    // rows already within the 1e-12 invariant stay untouched
    if (std::abs(sum - 1.0) > kLumpTol) entries.row(i) /= sum;
  }
  return Channel(std::move(entries));
}

Channel bsc(double eps) {
  validate_probability(eps, "eps");
  Eigen::MatrixXd m(2, 2);
  m << 1.0 - eps, eps, eps, 1.0 - eps;
  return Channel::from_entries(std::move(m));
}

Channel asymmetric_binary(double d1, double d2) {
  validate_probability(d1, "delta1");
  validate_probability(d2, "delta2");
  Eigen::MatrixXd m(2, 2);
  m << 1.0 - d1, d1, 1.0 - d2, d2;
  return Channel::from_entries(std::move(m));
}

Channel potts(int q, double delta) {
  require(q >= 2, Errc::out_of_range, "q must be >= 2");
  require(delta >= 0.0 && (q - 1) * delta <= 1.0 + 1e-15, Errc::out_of_range,
          "(q-1)*delta must lie in [0,1]");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(q, q, delta);
  m.diagonal().setConstant(1.0 - (q - 1) * delta);
  return Channel::from_entries(std::move(m));
}

Channel coloring(int q) {
  require(q >= 2, Errc::out_of_range, "q must be >= 2");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(q, q, 1.0 / (q - 1));
  m.diagonal().setZero();
  return Channel::from_entries(std::move(m));
}

Channel shift_channel(double p, int h, int alphabet_cap) {
  require(p > 0.0 && p < 1.0, Errc::out_of_range, "p must lie in (0,1)");
  require(h >= 1, Errc::out_of_range, "h must be >= 1");
  require(h < 30 && (1 << (h + 1)) <= alphabet_cap, Errc::alphabet_too_large,
          "2^(h+1) states exceed the alphabet cap");
  int k = 1 << (h + 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (int s = 0; s < k; ++s) {
    int shifted = s >> 1;  // drop the oldest bit (position 0)
    m(s, shifted) += p;                  // fresh bit 0
    m(s, shifted | (1 << h)) += 1.0 - p; // fresh bit 1
  }
  return Channel::from_entries(std::move(m));
}

Channel runlength_channel(double p, int h) {
  require(p > 0.0 && p < 1.0, Errc::out_of_range, "p must lie in (0,1)");
  require(h >= 1, Errc::out_of_range, "h must be >= 1");
  int k = h + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  // Fresh run distribution from state 0: run length j with prob p(1-p)^j,
  // capped tail mass (1-p)^h on state h.
  double tail = 1.0;
  for (int j = 0; j < h; ++j) {
    m(0, j) = p * tail;
    tail *= 1.0 - p;
  }
  m(0, h) = tail;
  for (int j = 1; j < h; ++j) m(j, j - 1) = 1.0;
  m(h, h - 1) = p;
  m(h, h) = 1.0 - p;
  return Channel::from_entries(std::move(m));
}

Channel iterate(const Channel& m, int h) {
  require(h >= 0, Errc::out_of_range, "h must be >= 0");
  int k = m.size();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(k, k);
  for (int step = 0; step < h; ++step) acc = acc * m.matrix();
  return Channel::from_entries(std::move(acc));
}

Channel lump(const Channel& m, const AlphabetPartition& part, double tol) {
  require(part.alphabet_size() == m.size(), Errc::not_lumpable,
          "partition does not cover the alphabet");
  int nb = part.block_count();
  Eigen::MatrixXd q(nb, nb);
  for (int bi = 0; bi < nb; ++bi) {
    int rep = part.blocks[bi].front();
    for (int bj = 0; bj < nb; ++bj) {
      double sum = 0.0;
      for (int j : part.blocks[bj]) sum += m(rep, j);
      q(bi, bj) = sum;
    }
    // Every representative must produce the same block-summed row.
    for (std::size_t r = 1; r < part.blocks[bi].size(); ++r) {
      int other = part.blocks[bi][r];
      for (int bj = 0; bj < nb; ++bj) {
        double sum = 0.0;
        for (int j : part.blocks[bj]) sum += m(other, j);
        require(std::abs(sum - q(bi, bj)) <= tol, Errc::not_lumpable,
                "states " + std::to_string(rep) + " and " + std::to_string(other) +
                    " disagree on block " + std::to_string(bj));
      }
    }
  }
  return Channel::from_entries(std::move(q));
}

SpectralData spectral(const Channel& m) {
  int k = m.size();
  SpectralData out;
  if (k == 1) {
    out.lambda2 = 0.0;
    out.v = Eigen::VectorXcd::Ones(1);
    out.pi = Eigen::VectorXd::Ones(1);
    out.tilde_c = 0.0;
    return out;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> solver(m.matrix());
  require(solver.info() == Eigen::Success, Errc::solver_failure, "eigensolver did not converge");

  // Order eigenvalues by |.| descending, ties by real then imaginary part.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double ma = std::abs(ev[a]), mb = std::abs(ev[b]);
    if (ma != mb) return ma > mb;
    if (ev[a].real() != ev[b].real()) return ev[a].real() > ev[b].real();
    return ev[a].imag() > ev[b].imag();
  });

  int idx2 = order[1];
  out.lambda2 = ev[idx2];
  Eigen::VectorXcd v = solver.eigenvectors().col(idx2);
  v.normalize();

  // Defective zero: lambda2 = 0 exactly iff rank(M^k) = 1 (Jordan form),
  // but a dense solver sees a zero Jordan block of size j only to within
  // eps^(1/j). When the solver value is small and the matrix power has
  // collapsed to identical rows, certify an exact kernel vector instead.
  if (std::abs(out.lambda2) <= 0.1 && std::abs(out.lambda2) > 0.0) {
    Eigen::MatrixXd power = m.matrix();
    for (int reach = 1; reach < k; reach *= 2) power = power * power;
    double spread = 0.0;
    for (int i = 1; i < k; ++i)
      spread = std::max(spread, (power.row(i) - power.row(0)).lpNorm<Eigen::Infinity>());
    if (spread <= 1e-12) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.matrix(), Eigen::ComputeFullV);
      Eigen::VectorXd kernel = svd.matrixV().col(k - 1);
      if ((m.matrix() * kernel).lpNorm<Eigen::Infinity>() <= 1e-12) {
        out.lambda2 = 0.0;
        v = kernel.cast<std::complex<double>>();
      }
    }
  }

  // Phase convention: first nonzero coordinate real positive.
  for (int i = 0; i < k; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  }
  out.v = v;

  // Stationary distribution: solve pi (M - I) = 0 with sum(pi) = 1 as a
  // least-squares system; exact for simple eigenvalue 1 and a valid
  // stationary vector in the reducible case.
  Eigen::MatrixXd a(k + 1, k);
  a.topRows(k) = m.matrix().transpose() - Eigen::MatrixXd::Identity(k, k);
  a.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  out.pi = a.colPivHouseholderQr().solve(rhs);
  require(((out.pi.transpose() * m.matrix()).transpose() - out.pi).lpNorm<Eigen::Infinity>() <= 1e-9,
          Errc::solver_failure, "stationary distribution residual too large");

  double c = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) c = std::max(c, std::abs(out.v[i] - out.v[j]));
  out.tilde_c = c;
  return out;
}

TwoStateDecomposition two_state_decomposition(const Channel& m, int i, int j) {
  int k = m.size();
  require(i >= 0 && i < k && j >= 0 && j < k && i != j, Errc::out_of_range,
          "states must be distinct and in range");
  for (int col = 0; col < k; ++col) {
    if (col == i || col == j) continue;
    require(std::abs(m(i, col) - m(j, col)) <= 1e-12, Errc::off_block_mismatch,
            "rows differ outside the block at column " + std::to_string(col));
  }
  const double a = m(i, i), b = m(i, j), c = m(j, i);
  // Block rows have equal sums, so delta = a - c = d - b. alpha (1-2eps)
  // equals delta, and beta, gamma >= 0 force alpha <= delta + 2 min(b,c);
  // the bound alpha (1-2eps)^2 = delta^2 / alpha is minimized at the top.
  const double delta = a - c;
  TwoStateDecomposition out;
  out.i = i;
  out.j = j;
  out.alpha = delta + 2.0 * std::min(b, c);
  out.degenerate = std::abs(delta) <= 1e-12;
  out.epsilon = out.alpha > 0.0 ? (out.alpha - delta) / (2.0 * out.alpha) : 0.5;
  out.beta = c - out.alpha * out.epsilon;
  out.gamma = b - out.alpha * out.epsilon;
  return out;
}

ThresholdReport classify_thresholds(const Channel& m, int b) {
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  ThresholdReport rep;
  double lam = spectral(m).lambda_abs();
  rep.kesten_stigum_value = b * lam * lam;
  double diff = rep.kesten_stigum_value - 1.0;
  if (std::abs(diff) <= 1e-9)
    rep.kesten_stigum = ThresholdSide::critical;
  else
    rep.kesten_stigum = diff > 0 ? ThresholdSide::above : ThresholdSide::below;

  int k = m.size();
  // Symmetric q-state structure: constant diagonal, constant off-diagonal.
  bool symmetric = true;
  double diag = m(0, 0), off = k >= 2 ? m(0, 1) : 0.0;
  for (int i = 0; i < k && symmetric; ++i)
    for (int j = 0; j < k && symmetric; ++j) {
      double want = i == j ? diag : off;
      if (std::abs(m(i, j) - want) > 1e-12) symmetric = false;
    }
  if (symmetric && k >= 2) {
    double delta = off;
    double denom = 1.0 - (k - 2) * delta;
    if (denom > 0) {
      double num = 1.0 - k * delta;
      rep.potts_bound = b * num * num / denom;
    }
  }
  if (k == 2) {
    double d1 = m(0, 1), d2 = m(1, 1);
    if (d1 + d2 > 0) rep.asym_bound = b * (d2 - d1) * (d2 - d1) / (d2 + d1);
  }
  return rep;
}

const char* threshold_side_name(ThresholdSide side) {
  switch (side) {
    case ThresholdSide::below: return "below";
    case ThresholdSide::critical: return "critical";
    case ThresholdSide::above: return "above";
  }
  return "?";
}

// ---- partitions -------------------------------------------------------------

AlphabetPartition AlphabetPartition::singletons(int k) {
  AlphabetPartition p;
  p.blocks.resize(k);
  p.block_of.resize(k);
  for (int i = 0; i < k; ++i) {
    p.blocks[i] = {i};
    p.block_of[i] = i;
  }
  return p;
}

AlphabetPartition AlphabetPartition::from_blocks(int k, std::vector<std::vector<int>> blocks) {
  std::vector<int> labels(k, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    require(!blocks[b].empty(), Errc::bad_config, "empty block");
    for (int s : blocks[b]) {
      require(s >= 0 && s < k, Errc::bad_config, "state out of range in block");
      require(labels[s] == -1, Errc::bad_config, "state appears in two blocks");
      labels[s] = static_cast<int>(b);
    }
  }
  for (int s = 0; s < k; ++s)
    require(labels[s] != -1, Errc::bad_config, "state " + std::to_string(s) + " not covered");
  return from_labels(labels);
}

AlphabetPartition AlphabetPartition::from_labels(const std::vector<int>& labels) {
  int k = static_cast<int>(labels.size());
  AlphabetPartition p;
  p.block_of.assign(k, -1);
  std::vector<int> renumber(k, -1);
  for (int s = 0; s < k; ++s) {
    int lbl = labels[s];
    if (renumber[lbl] == -1) {
      renumber[lbl] = static_cast<int>(p.blocks.size());
      p.blocks.emplace_back();
    }
    p.block_of[s] = renumber[lbl];
    p.blocks[renumber[lbl]].push_back(s);
  }
  return p;  // blocks ordered by minimum element since states scanned ascending
}

// ---- serialization ----------------------------------------------------------

namespace {

nlohmann::json matrix_to_json_array(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string channel_to_json(const Channel& m) {
  nlohmann::json j;
  j["k"] = m.size();
  j["entries"] = matrix_to_json_array(m.matrix());
  return j.dump();
}

Channel channel_from_json_value(const nlohmann::json& j) {
  if (j.contains("family")) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "bsc") return bsc(j.at("eps").get<double>());
    if (family == "asymmetric")
      return asymmetric_binary(j.at("delta1").get<double>(), j.at("delta2").get<double>());
    if (family == "potts") return potts(j.at("q").get<int>(), j.at("delta").get<double>());
    if (family == "coloring") return coloring(j.at("q").get<int>());
    if (family == "shift") return shift_channel(j.at("p").get<double>(), j.at("h").get<int>());
    if (family == "runlength")
      return runlength_channel(j.at("p").get<double>(), j.at("h").get<int>());
    fail(Errc::bad_config, "unknown channel family '" + family + "'");
  }
  int k = j.at("k").get<int>();
  const auto& rows = j.at("entries");
  require(static_cast<int>(rows.size()) == k, Errc::bad_config, "entries/k mismatch");
  Eigen::MatrixXd m(k, k);
  for (int i = 0; i < k; ++i) {
    require(static_cast<int>(rows[i].size()) == k, Errc::bad_config, "ragged entries");
    for (int jj = 0; jj < k; ++jj) m(i, jj) = rows[i][jj].get<double>();
  }
  return Channel::from_entries(std::move(m));
}

Channel channel_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, true, true);
  return channel_from_json_value(j);
}

std::string partition_to_json(const AlphabetPartition& p) {
  nlohmann::json j;
  j["blocks"] = p.blocks;
  return j.dump();
}

}  // namespace treeflow
