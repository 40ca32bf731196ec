#include "treeflow/fieldshare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace treeflow::fieldshare {

bool is_prime(std::uint32_t q) {
  if (q < 2) return false;
  for (std::uint32_t d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

namespace {

std::uint32_t mod_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t q) {
  std::uint64_t acc = 1 % q;
  base %= q;
  while (exp > 0) {
    if (exp & 1) acc = acc * base % q;
    base = base * base % q;
    exp >>= 1;
  }
  return static_cast<std::uint32_t>(acc);
}

std::uint32_t add(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  return (a + b) % q;
}
std::uint32_t sub(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  return (a + q - b) % q;
}
std::uint32_t mul(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  return static_cast<std::uint32_t>(static_cast<std::uint64_t>(a) * b % q);
}

}  // namespace

std::uint32_t mod_inverse(std::uint32_t a, std::uint32_t q) {
  require(a % q != 0, Errc::out_of_range, "zero has no inverse");
  return mod_pow(a, q - 2, q);  // q prime
}

std::uint32_t eval_poly(const SharePoly& f, FieldElement x) {
  require(f.q == x.q, Errc::modulus_mismatch,
          "polynomial over GF(" + std::to_string(f.q) + ") evaluated at GF(" +
              std::to_string(x.q) + ") element");
  std::uint32_t acc = 0;
  for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it)
    acc = add(mul(acc, x.value, f.q), *it % f.q, f.q);
  return acc;
}

SharePoly interpolate(std::uint32_t q,
                      std::span<const std::pair<std::uint32_t, std::uint32_t>> points) {
  require(is_prime(q), Errc::out_of_range, "modulus must be prime");
  const std::size_t n = points.size();
  require(n >= 1, Errc::bad_config, "need at least one point");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      require(points[i].first % q != points[j].first % q, Errc::duplicate_point,
              "repeated evaluation point " + std::to_string(points[i].first));

  SharePoly out;
  out.q = q;
  out.coeffs.assign(n, 0);
  std::vector<std::uint32_t> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    // numerator prod_{j != i} (x - x_j), denominator prod (x_i - x_j)
    std::fill(basis.begin(), basis.end(), 0);
    basis[0] = 1;
    std::size_t deg = 0;
    std::uint32_t denom = 1;
    const std::uint32_t xi = points[i].first % q;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::uint32_t xj = points[j].first % q;
      denom = mul(denom, sub(xi, xj, q), q);
      // multiply basis by (x - x_j); the product has degree deg+1
      for (std::size_t t = deg + 2; t-- > 0;) {
        std::uint32_t shifted = t > 0 ? basis[t - 1] : 0;
        basis[t] = sub(shifted, mul(basis[t], xj, q), q);
      }
      ++deg;
    }
    const std::uint32_t scale = mul(points[i].second % q, mod_inverse(denom, q), q);
    for (std::size_t t = 0; t <= deg; ++t)
      out.coeffs[t] = add(out.coeffs[t], mul(basis[t], scale, q), q);
  }
  return out;
}

ShareChannelSpec ShareChannelSpec::make(std::uint32_t q, int b, std::vector<std::uint32_t> points) {
  require(is_prime(q), Errc::out_of_range, "q must be prime");
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  require(q > static_cast<std::uint32_t>(b) + 2, Errc::out_of_range, "need q > b+2");
  if (points.empty()) {
    points.resize(b + 1);
    std::iota(points.begin(), points.end(), 1u);
  }
  require(static_cast<int>(points.size()) == b + 1, Errc::bad_config, "need b+1 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i] % q != 0, Errc::bad_config, "evaluation points must be nonzero");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      require(points[i] % q != points[j] % q, Errc::duplicate_point, "points must be distinct");
  }
  ShareChannelSpec spec;
  spec.q = q;
  spec.b = b;
  spec.points = std::move(points);
  return spec;
}

std::int64_t ShareChannelSpec::state_count() const {
  std::int64_t n = 1;
  for (int t = 0; t <= b; ++t) n *= q;
  return n;
}

std::int64_t poly_index(const SharePoly& f) {
  std::int64_t idx = 0;
  for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) idx = idx * f.q + *it;
  return idx;
}

SharePoly poly_from_index(const ShareChannelSpec& spec, std::int64_t index) {
  SharePoly f;
  f.q = spec.q;
  f.coeffs.assign(spec.b + 1, 0);
  for (int t = 0; t <= spec.b; ++t) {
    f.coeffs[t] = static_cast<std::uint32_t>(index % spec.q);
    index /= spec.q;
  }
  return f;
}

SharePoly share_channel_sample(const ShareChannelSpec& spec, const SharePoly& f, Rng& rng) {
  require(f.q == spec.q, Errc::modulus_mismatch, "polynomial over the wrong field");
  int i = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(spec.b + 1)));
  SharePoly g;
  g.q = spec.q;
  g.coeffs.assign(spec.b + 1, 0);
  g.coeffs[0] = eval_poly(f, {spec.points[i], spec.q});
  for (int t = 1; t <= spec.b; ++t) g.coeffs[t] = rng.next_below(spec.q);
  return g;
}

namespace {

// Counts of each field value among (f(x_1), ..., f(x_{b+1})).
std::vector<int> value_counts(const ShareChannelSpec& spec, const SharePoly& f) {
  std::vector<int> counts(spec.q, 0);
  for (std::uint32_t x : spec.points) ++counts[eval_poly(f, {x, spec.q})];
  return counts;
}

Channel materialize_raw(const ShareChannelSpec& spec, int alphabet_cap) {
  const std::int64_t n = spec.state_count();
  require(n <= alphabet_cap, Errc::alphabet_too_large,
          "q^(b+1) = " + std::to_string(n) + " states exceed the alphabet cap");
  double norm = static_cast<double>(spec.b + 1);
  for (int t = 0; t < spec.b; ++t) norm *= spec.q;
  Eigen::MatrixXd m(n, n);
  for (std::int64_t fi = 0; fi < n; ++fi) {
    auto counts = value_counts(spec, poly_from_index(spec, fi));
    for (std::int64_t gi = 0; gi < n; ++gi)
      m(fi, gi) = counts[static_cast<std::size_t>(gi % spec.q)] / norm;
  }
  return Channel::from_entries(std::move(m));
}

}  // namespace

Channel materialize_channel(const ShareChannelSpec& spec, int alphabet_cap) {
  return materialize_raw(spec, alphabet_cap);
}

SharePoly permute_poly(const ShareChannelSpec& spec, const SharePoly& f, std::span<const int> pi) {
  require(static_cast<int>(pi.size()) == spec.b + 1, Errc::bad_config, "permutation size mismatch");
  std::vector<char> seen(spec.b + 1, 0);
  for (int p : pi) {
    require(p >= 0 && p <= spec.b && !seen[p], Errc::bad_config, "not a permutation");
    seen[p] = 1;
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pts(spec.b + 1);
  for (int t = 0; t <= spec.b; ++t)
    pts[t] = {spec.points[pi[t]], eval_poly(f, {spec.points[t], spec.q})};
  return interpolate(spec.q, pts);
}

PairCounts pair_counts(const ShareChannelSpec& spec, std::int64_t enumeration_cap) {
  std::int64_t factorial = 1;
  for (int t = 2; t <= spec.b + 1; ++t) factorial *= t;
  require(spec.state_count() <= enumeration_cap / factorial, Errc::too_large,
          "pair enumeration exceeds the cap");

  PairCounts out;
  out.q = spec.q;
  out.n.assign(spec.q, std::vector<std::int64_t>(spec.q, 0));
  std::vector<int> pi(spec.b + 1);
  for (std::int64_t fi = 0; fi < spec.state_count(); ++fi) {
    SharePoly f = poly_from_index(spec, fi);
    std::uint32_t a = f.coeffs[0];
    std::iota(pi.begin(), pi.end(), 0);
    do {
      std::uint32_t bb = permute_poly(spec, f, pi).coeffs[0];
      ++out.n[a][bb];
    } while (std::next_permutation(pi.begin(), pi.end()));
  }
  return out;
}

AlphabetPartition orbit_partition(const ShareChannelSpec& spec) {
  const std::int64_t n = spec.state_count();
  require(n <= kDefaultAlphabetCap, Errc::too_large, "orbit enumeration exceeds the cap");
  std::vector<int> label(n, -1);
  std::vector<int> pi(spec.b + 1);
  std::vector<std::int64_t> orbit;
  for (std::int64_t fi = 0; fi < n; ++fi) {
    if (label[fi] != -1) continue;
    SharePoly f = poly_from_index(spec, fi);
    orbit.clear();
    std::iota(pi.begin(), pi.end(), 0);
    do {
      orbit.push_back(poly_index(permute_poly(spec, f, pi)));
    } while (std::next_permutation(pi.begin(), pi.end()));
    for (std::int64_t member : orbit) label[member] = static_cast<int>(fi);
  }
  std::vector<int> labels_int(label.begin(), label.end());
  return AlphabetPartition::from_labels(labels_int);
}

// ---- zero boundary information ---------------------------------------------------

namespace {

ZeroBoundaryReport verify_zero_boundary_impl(std::uint32_t q, int b,
                                             std::vector<std::uint32_t> points,
                                             std::int64_t support_cap) {
  require(is_prime(q), Errc::out_of_range, "q must be prime");
  require(b >= 1, Errc::out_of_range, "b must be >= 1");
  require(static_cast<int>(points.size()) == b + 1, Errc::bad_config, "need b+1 points");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      require(points[i] % q != points[j] % q, Errc::duplicate_point, "points must be distinct");

  ShareChannelSpec spec;  // may carry zero points; only used for evaluation
  spec.q = q;
  spec.b = b;
  spec.points = std::move(points);

  std::int64_t q_pow_b = 1;
  for (int t = 0; t < b; ++t) q_pow_b *= q;
  std::int64_t q_pow_bb = 1;
  for (int t = 0; t < b * b; ++t) {
    q_pow_bb *= q;
    require(q_pow_bb <= support_cap, Errc::too_large, "q^(b*b) exceeds the cap");
  }
  const std::int64_t n_states = spec.state_count();

  // T[a][cvec]: joint law of the b children's constant terms given the
  // parent's constant term a, cvec encoded base-q little-endian.
  std::vector<std::vector<double>> t_table(q, std::vector<double>(q_pow_b, 0.0));
  const double child_norm = static_cast<double>(b + 1);
  for (std::uint32_t a = 0; a < q; ++a) {
    for (std::int64_t hi = 0; hi < q_pow_b; ++hi) {
      SharePoly g;
      g.q = q;
      g.coeffs.assign(b + 1, 0);
      g.coeffs[0] = a;
      std::int64_t rest = hi;
      for (int t = 1; t <= b; ++t) {
        g.coeffs[t] = static_cast<std::uint32_t>(rest % q);
        rest /= q;
      }
      auto counts = value_counts(spec, g);
      for (std::int64_t cv = 0; cv < q_pow_b; ++cv) {
        double p = 1.0;
        std::int64_t dec = cv;
        for (int t = 0; t < b; ++t) {
          p *= counts[static_cast<std::size_t>(dec % q)] / child_norm;
          dec /= q;
        }
        t_table[a][cv] += p / static_cast<double>(q_pow_b);
      }
    }
  }

  // Joint law of all b*b leaf constant terms given each root, using the
  // subtree factorization: independent blocks per root child, each block
  // a mixture over the child's constant term.
  std::vector<std::vector<double>> joint(n_states);
  std::vector<double> u_f(q_pow_b);
  for (std::int64_t fi = 0; fi < n_states; ++fi) {
    auto counts = value_counts(spec, poly_from_index(spec, fi));
    std::fill(u_f.begin(), u_f.end(), 0.0);
    for (std::uint32_t a = 0; a < q; ++a) {
      if (counts[a] == 0) continue;
      double w = counts[a] / child_norm;
      for (std::int64_t cv = 0; cv < q_pow_b; ++cv) u_f[cv] += w * t_table[a][cv];
    }
    auto& vec = joint[fi];
    vec.assign(q_pow_bb, 1.0);
    for (std::int64_t id = 0; id < q_pow_bb; ++id) {
      std::int64_t dec = id;
      double p = 1.0;
      for (int blk = 0; blk < b; ++blk) {
        p *= u_f[dec % q_pow_b];
        dec /= q_pow_b;
      }
      vec[id] = p;
    }
  }

  ZeroBoundaryReport report;
  report.q = q;
  report.b = b;
  report.points = spec.points;
  report.roots_checked = static_cast<int>(n_states);
  for (std::int64_t id = 0; id < q_pow_bb; ++id) {
    double lo = joint[0][id], hi_v = joint[0][id];
    for (std::int64_t fi = 1; fi < n_states; ++fi) {
      lo = std::min(lo, joint[fi][id]);
      hi_v = std::max(hi_v, joint[fi][id]);
    }
    report.max_discrepancy = std::max(report.max_discrepancy, hi_v - lo);
  }

  // Exact mutual information, uniform root prior; the non-constant leaf
  // coefficients are uniform and independent of everything, so they drop
  // out of the information.
  std::vector<double> marginal(q_pow_bb, 0.0);
  for (std::int64_t fi = 0; fi < n_states; ++fi)
    for (std::int64_t id = 0; id < q_pow_bb; ++id)
      marginal[id] += joint[fi][id] / static_cast<double>(n_states);
  double info = 0.0;
  for (std::int64_t fi = 0; fi < n_states; ++fi)
    for (std::int64_t id = 0; id < q_pow_bb; ++id) {
      double p = joint[fi][id];
      if (p > 0.0 && marginal[id] > 0.0)
        info += p / static_cast<double>(n_states) * std::log(p / marginal[id]);
    }
  report.mutual_information = std::max(info, 0.0);

  // Structural check: transitions may depend on the output polynomial
  // only through its constant term.
  report.coefficients_uniform = true;
  if (n_states <= kDefaultAlphabetCap) {
    Channel m = materialize_raw(spec, kDefaultAlphabetCap);
    for (std::int64_t fi = 0; fi < n_states && report.coefficients_uniform; ++fi)
      for (std::int64_t gi = 0; gi < n_states; ++gi)
        if (m(static_cast<int>(fi), static_cast<int>(gi)) !=
            m(static_cast<int>(fi), static_cast<int>(gi % q))) {
          report.coefficients_uniform = false;
          break;
        }
  }

  report.pass = report.max_discrepancy <= 1e-12 && report.mutual_information <= 1e-10 &&
                report.coefficients_uniform;
  return report;
}

}  // namespace

ZeroBoundaryReport verify_zero_boundary_information(const ShareChannelSpec& spec,
                                                    std::int64_t support_cap) {
  return verify_zero_boundary_impl(spec.q, spec.b, spec.points, support_cap);
}

ZeroBoundaryReport verify_zero_boundary_information_points(std::uint32_t q, int b,
                                                           std::vector<std::uint32_t> points,
                                                           std::int64_t support_cap) {
  return verify_zero_boundary_impl(q, b, std::move(points), support_cap);
}

// ---- serialization ------------------------------------------------------------

std::string spec_to_json(const ShareChannelSpec& spec) {
  nlohmann::json j;
  j["q"] = spec.q;
  j["b"] = spec.b;
  j["points"] = spec.points;
  return j.dump();
}

ShareChannelSpec spec_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, true, true);
  std::vector<std::uint32_t> points;
  if (j.contains("points")) points = j.at("points").get<std::vector<std::uint32_t>>();
  return ShareChannelSpec::make(j.at("q").get<std::uint32_t>(), j.at("b").get<int>(),
                                std::move(points));
}

std::string report_to_json(const ZeroBoundaryReport& report) {
  nlohmann::json j;
  j["q"] = report.q;
  j["b"] = report.b;
  j["points"] = report.points;
  j["roots_checked"] = report.roots_checked;
  j["max_discrepancy"] = report.max_discrepancy;
  j["mutual_information"] = report.mutual_information;
  j["coefficients_uniform"] = report.coefficients_uniform;
  j["pass"] = report.pass;
  return j.dump();
}

}  // namespace treeflow::fieldshare
