#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treeflow/broadcast.hpp"

namespace treeflow {

/// One measured value at one parameter point.
struct RunRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;  // key -> formatted value
  std::string quantity;
  double value = 0.0;
  double std_error = 0.0;
  std::string method;  // "exact" | "monte_carlo" | "heuristic"
  double wall_seconds = 0.0;
};

/// Config-driven sweep. JSON shape:
///   {"name": "...", "channel": {...family, params may be arrays...},
///    "tree": {"b": 2, "depths": [1,2,3]},
///    "quantities": ["tv","chi2","mi","census_tv","estimator_moments",
///                   "reconstruction_success","lower_bounds"],
///    "samples": 10000, "seed": 1, "i": 0, "j": 1,
///    "test": "exact_posterior", "out": "runs/exp"}
struct ExperimentSpec {
  std::string name;
  std::string channel_json;          // resolved family/channel object
  int tree_b = 2;
  std::vector<int> depths;
  std::vector<std::string> quantities;
  std::int64_t samples = 1000;
  std::uint64_t seed = 1;
  int state_i = 0;
  int state_j = 1;
  std::string test = "exact_posterior";
  std::string out_path;              // prefix for .csv / .manifest.json

  static ExperimentSpec from_json(const std::string& text);
  std::string to_json() const;
};

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int threads = 1);

/// CSV with header name,<param keys...>,quantity,value,std_error,method;
/// shortest round-trip decimal formatting.
std::string records_to_csv(const std::vector<RunRecord>& records);

/// Manifest {"schema":1, "experiment": <resolved spec>, "records":[...]}.
std::string manifest_json(const ExperimentSpec& spec, const std::vector<RunRecord>& records);

/// Accepts either an experiment spec or a manifest produced by a previous
/// run (re-running a manifest reproduces the records).
ExperimentSpec experiment_from_json_or_manifest(const std::string& text);

// ---- acceptance / verification suite ---------------------------------------

enum class VerifyLevel { quick, full };

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double wall_seconds = 0.0;
};

struct FaultInjection {
  bool corrupt_stochasticity = false;  // perturbs one channel row before validation
};

/// Runs the acceptance checks (all of them, or the single named one).
/// quick caps sample counts; thresholds keep their stated tolerances.
std::vector<CheckResult> run_acceptance_checks(VerifyLevel level, int threads = 1,
                                               const std::string& only = "",
                                               const FaultInjection* fault = nullptr);

}  // namespace treeflow
