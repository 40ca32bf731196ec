#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treeflow/channel.hpp"
#include "treeflow/partition.hpp"
#include "treeflow/rng.hpp"

namespace treeflow::fieldshare {

bool is_prime(std::uint32_t q);

/// Element of the prime field GF(q); carries its modulus so mixed-modulus
/// arithmetic is rejected.
struct FieldElement {
  std::uint32_t value = 0;
  std::uint32_t q = 2;
};

std::uint32_t mod_inverse(std::uint32_t a, std::uint32_t q);

/// Polynomial of degree <= b over GF(q); exactly b+1 coefficients,
/// little-endian (coeffs[0] is the constant term), zero-padded.
struct SharePoly {
  std::uint32_t q = 2;
  std::vector<std::uint32_t> coeffs;

  int degree_bound() const { return static_cast<int>(coeffs.size()) - 1; }
  bool operator==(const SharePoly& other) const { return q == other.q && coeffs == other.coeffs; }
};

std::uint32_t eval_poly(const SharePoly& f, FieldElement x);

/// Unique degree <= n-1 polynomial through n points with distinct x, by
/// the Lagrange formula.
SharePoly interpolate(std::uint32_t q, std::span<const std::pair<std::uint32_t, std::uint32_t>> points);

/// Parameters of the share channel: a prime q > b+2 and b+1 distinct
/// nonzero evaluation points.
struct ShareChannelSpec {
  std::uint32_t q = 5;
  int b = 2;
  std::vector<std::uint32_t> points;

  static ShareChannelSpec make(std::uint32_t q, int b, std::vector<std::uint32_t> points = {});

  std::int64_t state_count() const;  // q^(b+1)
};

// State indexing of the polynomials: base-q little-endian over the
// coefficient vector.
std::int64_t poly_index(const SharePoly& f);
SharePoly poly_from_index(const ShareChannelSpec& spec, std::int64_t index);

/// One channel step: pick a uniform evaluation point index I, output a
/// uniform polynomial g with g(0) = f(x_I).
SharePoly share_channel_sample(const ShareChannelSpec& spec, const SharePoly& f, Rng& rng);

/// Exact transition matrix on the q^(b+1) polynomials:
/// M_{f,g} = #{i : f(x_i) = g(0)} / ((b+1) q^b).
Channel materialize_channel(const ShareChannelSpec& spec, int alphabet_cap = kDefaultAlphabetCap);

/// The polynomial with f_pi(x_pi(k)) = f(x_k); pi is a permutation of
/// {0..b} in zero-based form.
SharePoly permute_poly(const ShareChannelSpec& spec, const SharePoly& f, std::span<const int> pi);

struct PairCounts {
  std::uint32_t q = 0;
  std::vector<std::vector<std::int64_t>> n;  // n[a][b]
};

/// Brute-force count over all (f, pi) of pairs with f(0) = a, f_pi(0) = b.
PairCounts pair_counts(const ShareChannelSpec& spec, std::int64_t enumeration_cap = 100'000'000);

struct ZeroBoundaryReport {
  std::uint32_t q = 0;
  int b = 0;
  std::vector<std::uint32_t> points;
  int roots_checked = 0;
  /// Max over leaf-constant-term vectors and root pairs of the absolute
  /// difference of the exact conditional probabilities.
  double max_discrepancy = 0.0;
  /// Exact I(root; leaves) in nats for the uniform root prior on the
  /// 2-level b-ary tree.
  double mutual_information = 0.0;
  /// True iff the materialized transitions depend on the output only
  /// through its constant term (non-constant coefficients uniform).
  bool coefficients_uniform = false;
  bool pass = false;
};

/// Exact check on the 2-level b-ary tree that the leaf distribution is
/// the same for every root polynomial, via the constant-term
/// factorization (nothing else about the leaves depends on the root).
/// Checks every root polynomial exactly; requires q^(b*b) below the cap.
ZeroBoundaryReport verify_zero_boundary_information(const ShareChannelSpec& spec,
                                                    std::int64_t support_cap = 10'000'000);

/// Same computation on raw points without the nonzero-point validation
/// (negative control: a zero evaluation point breaks the property).
ZeroBoundaryReport verify_zero_boundary_information_points(std::uint32_t q, int b,
                                                           std::vector<std::uint32_t> points,
                                                           std::int64_t support_cap = 10'000'000);

/// Partition of the q^(b+1) polynomial states into orbits of the
/// symmetric group action f -> f_pi.
AlphabetPartition orbit_partition(const ShareChannelSpec& spec);

std::string spec_to_json(const ShareChannelSpec& spec);
ShareChannelSpec spec_from_json(const std::string& text);
std::string report_to_json(const ZeroBoundaryReport& report);

}  // namespace treeflow::fieldshare
