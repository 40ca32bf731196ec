#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "treeflow/experiment.hpp"

using namespace treeflow;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("ising-style sweep produces ordered records") {
  auto spec = ExperimentSpec::from_json(R"({
    "name": "ising_tv",
    "channel": {"family": "bsc", "eps": [0.05, 0.25, 0.45]},
    "tree": {"b": 2, "depths": [1, 2, 3]},
    "quantities": ["lower_bounds"],
    "samples": 3000,
    "seed": 5,
    "test": "exact_posterior"
  })");
  auto records = run_experiment(spec);
  REQUIRE(records.size() == 9);

  std::string csv = records_to_csv(records);
  auto lines = split_lines(csv);
  CHECK(lines.front() == "name,eps,b,depth,quantity,value,std_error,method");
  CHECK(lines.size() == 10);

  // at every depth the bound decreases as the channel gets noisier
  auto value_at = [&](double eps, int depth) {
    for (const auto& r : records) {
      bool match_eps = false, match_depth = false;
      for (const auto& [k, v] : r.params) {
        if (k == "eps" && std::abs(std::stod(v) - eps) < 1e-12) match_eps = true;
        if (k == "depth" && std::stoi(v) == depth) match_depth = true;
      }
      if (match_eps && match_depth) return r.value;
    }
    FAIL("record not found");
    return 0.0;
  };
  for (int depth : {1, 2, 3}) CHECK(value_at(0.05, depth) > value_at(0.45, depth));
}

TEST_CASE("potts census sweep is exact") {
  auto spec = ExperimentSpec::from_json(R"({
    "name": "potts_census",
    "channel": {"family": "potts", "q": 3, "delta": [0.05, 0.15, 0.25]},
    "tree": {"b": 2, "depths": [1, 2, 3, 4]},
    "quantities": ["census_tv"],
    "samples": 1,
    "seed": 1
  })");
  auto records = run_experiment(spec);
  REQUIRE(records.size() == 12);
  for (const auto& r : records) {
    CHECK(r.method == "exact");
    CHECK(r.std_error == 0.0);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
  }
}

TEST_CASE("empty quantity list yields an empty but valid run") {
  auto spec = ExperimentSpec::from_json(R"({
    "name": "empty",
    "channel": {"family": "bsc", "eps": 0.2},
    "tree": {"b": 2, "depths": [1]},
    "quantities": [],
    "samples": 10,
    "seed": 1
  })");
  auto records = run_experiment(spec);
  CHECK(records.empty());
  std::string manifest = manifest_json(spec, records);
  CHECK(manifest.find("\"schema\": 1") != std::string::npos);
  CHECK(records_to_csv(records) == "name,quantity,value,std_error,method\n");
}

TEST_CASE("manifest reruns reproduce every record") {
  std::string out = "/tmp/treeflow_exp_test";
  auto spec = ExperimentSpec::from_json(R"({
    "name": "repro",
    "channel": {"family": "bsc", "eps": [0.1, 0.3]},
    "tree": {"b": 2, "depths": [2, 3]},
    "quantities": ["tv", "census_tv"],
    "samples": 2000,
    "seed": 77,
    "out": "/tmp/treeflow_exp_test"
  })");
  auto first = run_experiment(spec);

  std::ifstream in(out + ".manifest.json");
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  auto respec = experiment_from_json_or_manifest(ss.str());
  respec.out_path.clear();
  auto second = run_experiment(respec);

  REQUIRE(first.size() == second.size());
  for (std::size_t t = 0; t < first.size(); ++t) {
    CHECK(first[t].quantity == second[t].quantity);
    CHECK(first[t].value == second[t].value);  // bit-identical re-run
    CHECK(first[t].std_error == second[t].std_error);
  }
  std::remove((out + ".csv").c_str());
  std::remove((out + ".manifest.json").c_str());
}

TEST_CASE("experiment errors carry the failing point") {
  auto spec = ExperimentSpec::from_json(R"({
    "name": "bad",
    "channel": {"family": "bsc", "eps": 0.2},
    "tree": {"b": 2, "depths": [1]},
    "quantities": ["nope"],
    "samples": 10,
    "seed": 1
  })");
  try {
    run_experiment(spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("depth 1") != std::string::npos);
  }
}

TEST_CASE("verify suite: stochasticity check and its negative control") {
  auto ok = run_acceptance_checks(VerifyLevel::quick, 1, "stochasticity");
  REQUIRE(ok.size() == 1);
  CHECK(ok.front().pass);

  FaultInjection fault;
  fault.corrupt_stochasticity = true;
  auto bad = run_acceptance_checks(VerifyLevel::quick, 1, "stochasticity", &fault);
  REQUIRE(bad.size() == 1);
  CHECK_FALSE(bad.front().pass);
}

TEST_CASE("fast acceptance criteria pass at the quick level") {
  for (const char* name : {"criterion-1", "criterion-2", "criterion-3"}) {
    auto results = run_acceptance_checks(VerifyLevel::quick, 1, name);
    REQUIRE(results.size() == 1);
    CHECK(results.front().pass);
    CHECK(results.front().wall_seconds < 1.0);
  }
}
