#include "treeflow/experiment.hpp"

#include <chrono>
#include <fstream>

#include "internal.hpp"
#include "treeflow/census.hpp"
#include "treeflow/reconstruct.hpp"

namespace treeflow {

namespace {

using nlohmann::json;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string format_param(const json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

/// Expands array-valued family parameters into a cartesian grid.
struct GridPoint {
  std::vector<std::pair<std::string, std::string>> params;
  json channel;
};

std::vector<GridPoint> expand_channel_grid(const json& channel_spec) {
  std::vector<std::string> sweep_keys;
  for (const auto& [key, value] : channel_spec.items())
    if (value.is_array() && key != "entries" && key != "points") sweep_keys.push_back(key);

  std::vector<GridPoint> grid;
  GridPoint base;
  base.channel = channel_spec;
  grid.push_back(std::move(base));
  for (const auto& key : sweep_keys) {
    std::vector<GridPoint> next;
    for (const auto& point : grid) {
      for (const auto& value : channel_spec.at(key)) {
        GridPoint p = point;
        p.channel[key] = value;
        p.params.emplace_back(key, format_param(value));
        next.push_back(std::move(p));
      }
    }
    grid = std::move(next);
  }
  if (sweep_keys.empty()) {
    // still echo scalar family parameters as columns
    for (const auto& [key, value] : channel_spec.items())
      if (key != "entries" && key != "family" && key != "points")
        grid[0].params.emplace_back(key, format_param(value));
  }
  return grid;
}

std::vector<double> uniform_prior(int k) {
  return std::vector<double>(k, 1.0 / k);
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);
  ExperimentSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.channel_json = j.at("channel").dump();
  const auto& tree = j.at("tree");
  spec.tree_b = tree.at("b").get<int>();
  spec.depths = tree.at("depths").get<std::vector<int>>();
  spec.quantities = j.at("quantities").get<std::vector<std::string>>();
  if (j.contains("samples")) spec.samples = j.at("samples").get<std::int64_t>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("i")) spec.state_i = j.at("i").get<int>();
  if (j.contains("j")) spec.state_j = j.at("j").get<int>();
  if (j.contains("test")) spec.test = j.at("test").get<std::string>();
  if (j.contains("out")) spec.out_path = j.at("out").get<std::string>();
  require(spec.samples >= 1, Errc::bad_config, "samples must be >= 1");
  require(spec.tree_b >= 1, Errc::bad_config, "tree b must be >= 1");
  return spec;
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["name"] = name;
  j["channel"] = json::parse(channel_json);
  j["tree"] = {{"b", tree_b}, {"depths", depths}};
  j["quantities"] = quantities;
  j["samples"] = samples;
  j["seed"] = seed;
  j["i"] = state_i;
  j["j"] = state_j;
  j["test"] = test;
  if (!out_path.empty()) j["out"] = out_path;
  return j.dump();
}

ExperimentSpec experiment_from_json_or_manifest(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);
  if (j.contains("schema") && j.contains("experiment"))
    return ExperimentSpec::from_json(j.at("experiment").dump());
  return ExperimentSpec::from_json(text);
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, int threads) {
  json channel_spec = json::parse(spec.channel_json);
  auto grid = expand_channel_grid(channel_spec);
  std::vector<RunRecord> records;
  std::uint64_t point_index = 0;

  for (const auto& point : grid) {
    Channel m = [&] {
      try {
        return channel_from_json_value(point.channel);
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " at channel " + point.channel.dump());
      }
    }();
    const int i = spec.state_i, j = spec.state_j;
    require(i >= 0 && i < m.size() && j >= 0 && j < m.size(), Errc::bad_config,
            "states i/j outside the alphabet at channel " + point.channel.dump());

    for (int depth : spec.depths) {
      std::uint64_t run_seed = splitmix64(spec.seed ^ (0x5eedull + point_index));
      ++point_index;
      auto params = point.params;
      params.emplace_back("b", std::to_string(spec.tree_b));
      params.emplace_back("depth", std::to_string(depth));

      auto emit = [&](const std::string& quantity, double value, double std_error,
                      const std::string& method, double wall) {
        records.push_back({spec.name, params, quantity, value, std_error, method, wall});
      };

      for (const auto& quantity : spec.quantities) {
        double t0 = now_seconds();
        try {
          if (quantity == "tv") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            auto est = mc_total_variation(tree, m, depth, i, j, spec.samples, run_seed, threads);
            emit(quantity, est.value, est.std_error, "monte_carlo", now_seconds() - t0);
          } else if (quantity == "chi2") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            auto est = mc_chi_square(tree, m, depth, i, j, spec.samples, run_seed, threads);
            emit(quantity, est.value, est.std_error, "monte_carlo", now_seconds() - t0);
          } else if (quantity == "mi") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            auto prior = uniform_prior(m.size());
            auto est =
                mc_mutual_information(tree, m, depth, prior, spec.samples, run_seed, threads);
            emit(quantity, est.value, est.std_error, "monte_carlo", now_seconds() - t0);
          } else if (quantity == "census_tv") {
            auto pi = exact_census_distribution(spec.tree_b, depth, m, i);
            auto pj = exact_census_distribution(spec.tree_b, depth, m, j);
            emit(quantity, census_total_variation(pi, pj), 0.0, "exact", now_seconds() - t0);
          } else if (quantity == "estimator_moments") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            SpectralData sd = spectral(m);
            auto est_spec = EstimatorSpec::for_level(tree, sd, depth);
            auto moments =
                estimator_moments_mc(tree, m, est_spec, i, spec.samples, run_seed, threads);
            double wall = now_seconds() - t0;
            emit("estimator_mean_re", moments.mean.real(), moments.mean_std_error, "monte_carlo",
                 wall);
            emit("estimator_mean_im", moments.mean.imag(), moments.mean_std_error, "monte_carlo",
                 0.0);
            emit("estimator_second_moment", moments.second_moment,
                 moments.second_moment_std_error, "monte_carlo", 0.0);
            double reff = depth == 0
                              ? 0.0
                              : effective_resistance(
                                    tree, ResistanceProfile::from_lambda(sd.lambda2),
                                    std::vector<int>(tree.level(depth).begin(),
                                                     tree.level(depth).end()));
            emit("estimator_bound", 1.0 + reff, 0.0, "exact", 0.0);
          } else if (quantity == "reconstruction_success") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            auto est = mc_reconstruction_success(tree, m, spec.samples, run_seed, threads);
            emit(quantity, est.value, est.std_error, "monte_carlo", now_seconds() - t0);
          } else if (quantity == "lower_bounds") {
            RootedTree tree = RootedTree::bary(spec.tree_b, depth);
            auto test = make_reconstruction_test(spec.test, depth, i, j);
            auto est = tv_lower_bound_from_test(tree, m, depth, i, j, test, spec.samples,
                                                run_seed, threads);
            const char* method = spec.test == "plurality" ? "heuristic" : "monte_carlo";
            emit(quantity, clamp01(est.value), est.std_error, method, now_seconds() - t0);
          } else {
            fail(Errc::bad_config, "unknown quantity '" + quantity + "'");
          }
        } catch (const Error& e) {
          throw Error(e.code(), std::string(e.what()) + " (at " + point.channel.dump() +
                                    ", depth " + std::to_string(depth) + ")");
        }
      }
    }
  }

  if (!spec.out_path.empty()) {
    std::ofstream csv(spec.out_path + ".csv");
    require(csv.good(), Errc::bad_config, "cannot write " + spec.out_path + ".csv");
    csv << records_to_csv(records);
    std::ofstream manifest(spec.out_path + ".manifest.json");
    require(manifest.good(), Errc::bad_config, "cannot write manifest");
    manifest << manifest_json(spec, records) << "\n";
  }
  return records;
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string out = "name";
  if (!records.empty())
    for (const auto& [key, value] : records.front().params) out += "," + key;
  out += ",quantity,value,std_error,method\n";
  for (const auto& r : records) {
    out += r.experiment;
    for (const auto& [key, value] : r.params) out += "," + value;
    out += "," + r.quantity + "," + format_double(r.value) + "," + format_double(r.std_error) +
           "," + r.method + "\n";
  }
  return out;
}

std::string manifest_json(const ExperimentSpec& spec, const std::vector<RunRecord>& records) {
  json j;
  j["schema"] = 1;
  j["experiment"] = json::parse(spec.to_json());
  json recs = json::array();
  for (const auto& r : records) {
    json params = json::object();
    for (const auto& [key, value] : r.params) params[key] = value;
    recs.push_back({{"quantity", r.quantity},
                    {"params", params},
                    {"value", r.value},
                    {"std_error", r.std_error},
                    {"method", r.method},
                    {"wall_seconds", r.wall_seconds}});
  }
  j["records"] = std::move(recs);
  return j.dump(2);
}

}  // namespace treeflow
