#pragma once

#include <stdexcept>
#include <string>

namespace treeflow {

enum class Errc {
  non_stochastic,
  negative_entry,
  out_of_range,
  alphabet_too_large,
  not_lumpable,
  solver_failure,
  off_block_mismatch,
  size_cap,
  cycle,
  multiple_roots,
  disconnected,
  unknown_vertex,
  incomplete_level,
  support_cap,
  incomplete_antichain,
  degenerate_prior,
  no_distinct_rows,
  eps_too_large,
  unreachable,
  zero_lambda,
  modulus_mismatch,
  duplicate_point,
  too_large,
  bad_config,
};

const char* errc_name(Errc c);

/// Single exception type for all validation and domain errors; the code
/// distinguishes the named error conditions of each module.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace treeflow
