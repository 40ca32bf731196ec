// treeflow: channels, trees, broadcast experiments and the verification
// suite from one binary. All structured output is JSON or CSV.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "treeflow/census.hpp"
#include "treeflow/distinguish.hpp"
#include "treeflow/experiment.hpp"
#include "treeflow/fieldshare.hpp"
#include "treeflow/reconstruct.hpp"

namespace {

using nlohmann::json;
using namespace treeflow;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::bad_config, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON, or @path to load a file.
std::string resolve_text(const std::string& arg) {
  if (!arg.empty() && arg.front() == '@') return slurp(arg.substr(1));
  return arg;
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(out_path);
  require(out.good(), Errc::bad_config, "cannot write " + out_path);
  out << text;
}

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
};

json spectral_json(const Channel& m) {
  SpectralData sd = spectral(m);
  json j;
  j["lambda2"] = {{"re", sd.lambda2.real()}, {"im", sd.lambda2.imag()}, {"abs", sd.lambda_abs()}};
  j["pi"] = std::vector<double>(sd.pi.data(), sd.pi.data() + sd.pi.size());
  json v = json::array();
  for (Eigen::Index t = 0; t < sd.v.size(); ++t)
    v.push_back({{"re", sd.v[t].real()}, {"im", sd.v[t].imag()}});
  j["v"] = std::move(v);
  j["tilde_c"] = sd.tilde_c;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"broadcast processes on trees: channels, divergences, estimators"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed for all sampling");
  app.add_option("--threads", g.threads, "worker threads for Monte Carlo batches");
  app.add_option("--out", g.out, "output path (default stdout)");

  std::string channel_arg, tree_arg = "{\"bary\":{\"b\":2,\"n\":4}}";

  auto add_channel_opt = [&](CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--channel", channel_arg,
                                "channel JSON ({\"family\":...} or {\"k\":..,\"entries\":..}); @file to load");
    if (required) opt->required();
  };

  // channel info
  auto* channel_cmd = app.add_subcommand("channel", "channel construction and analysis");
  auto* info = channel_cmd->add_subcommand("info", "validate and spectrally analyze a channel");
  int info_b = 0;
  add_channel_opt(info);
  info->add_option("--b", info_b, "branching factor for threshold classification");

  // distinguish
  auto* distinguish_cmd = app.add_subcommand("distinguish", "indistinguishability analysis");
  add_channel_opt(distinguish_cmd);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "broadcast a configuration, dump CSV");
  int sim_root = 0;
  add_channel_opt(simulate);
  simulate->add_option("--tree", tree_arg, "tree JSON ({\"bary\":{\"b\":2,\"n\":4}} or {\"parents\":[...]})");
  simulate->add_option("--root", sim_root, "root symbol");

  // measure
  auto* measure = app.add_subcommand("measure", "divergence measurements");
  std::string quantity = "tv", test_name = "exact_posterior";
  int ms_b = 2, ms_depth = 2, ms_i = 0, ms_j = 1;
  std::int64_t ms_samples = 10000;
  bool ms_exact = false, ms_bits = false;
  add_channel_opt(measure);
  measure->add_option("--quantity", quantity, "tv | chi2 | mi | census_tv | tv_lower_bound");
  measure->add_option("--b", ms_b, "branching factor");
  measure->add_option("--depth", ms_depth, "level to observe");
  measure->add_option("--i", ms_i, "first root state");
  measure->add_option("--j", ms_j, "second root state");
  measure->add_option("--samples", ms_samples, "Monte Carlo samples");
  measure->add_option("--test", test_name, "test for tv_lower_bound");
  measure->add_flag("--exact", ms_exact, "use the exact small-instance distribution");
  measure->add_flag("--bits", ms_bits, "report mutual information in bits");

  // census-estimate
  auto* census_cmd = app.add_subcommand("census-estimate", "linear census estimator moments");
  int ce_b = 2, ce_depth = 4, ce_root = 0;
  std::int64_t ce_samples = 10000;
  std::string flow_out;
  add_channel_opt(census_cmd);
  census_cmd->add_option("--b", ce_b, "branching factor");
  census_cmd->add_option("--depth", ce_depth, "antichain level");
  census_cmd->add_option("--root", ce_root, "conditioning root symbol");
  census_cmd->add_option("--samples", ce_samples, "Monte Carlo samples");
  census_cmd->add_option("--flow-out", flow_out, "write the optimal flow as CSV");

  // fieldshare verify
  auto* fieldshare_cmd = app.add_subcommand("fieldshare", "secret-sharing channel checks");
  auto* fs_verify = fieldshare_cmd->add_subcommand("verify", "run the exact share-channel suite");
  std::uint32_t fs_q = 5;
  int fs_b = 2;
  std::vector<std::uint32_t> fs_points;
  fs_verify->add_option("--q", fs_q, "field size (prime, > b+2)");
  fs_verify->add_option("--b", fs_b, "polynomial degree bound / tree arity");
  fs_verify->add_option("--points", fs_points, "evaluation points (default 1..b+1)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a config-driven experiment");
  std::string config_arg;
  sweep->add_option("--config", config_arg, "experiment spec or manifest JSON; @file to load")
      ->required();

  // verify-suite
  auto* verify = app.add_subcommand("verify-suite", "acceptance checks");
  std::string level_arg = "quick", only;
  std::string inject;
  verify->add_option("--level", level_arg, "quick | full");
  verify->add_option("--only", only, "run only checks whose name contains this");
  verify->add_option("--inject-fault", inject, "test hook (stochasticity)")->group("");

  // global flags may appear after the verb
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto* subsub : sub->get_subcommands({})) subsub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  if (*info) {
    Channel m = channel_from_json(resolve_text(channel_arg));
    json j = json::parse(channel_to_json(m));
    j["spectral"] = spectral_json(m);
    if (info_b >= 1) {
      auto rep = classify_thresholds(m, info_b);
      json c;
      c["b"] = info_b;
      c["kesten_stigum_value"] = rep.kesten_stigum_value;
      c["kesten_stigum"] = threshold_side_name(rep.kesten_stigum);
      if (rep.potts_bound) c["potts_bound"] = *rep.potts_bound;
      if (rep.asym_bound) c["asym_bound"] = *rep.asym_bound;
      j["classification"] = std::move(c);
    }
    write_output(g.out, j.dump(2));
    return 0;
  }

  if (*distinguish_cmd) {
    Channel m = channel_from_json(resolve_text(channel_arg));
    auto part = indistinguishability_partition(m);
    json j = json::parse(partition_to_json(part));
    j["all_indistinguishable"] = part.block_count() == 1;
    j["quotient_k"] = part.block_count();
    if (auto depth = indistinguishable_merge_depth(m)) j["merge_depth"] = *depth;
    write_output(g.out, j.dump(2));
    return 0;
  }

  if (*simulate) {
    Channel m = channel_from_json(resolve_text(channel_arg));
    RootedTree tree = tree_from_json(resolve_text(tree_arg));
    Configuration config = broadcast_sample(tree, m, sim_root, g.seed);
    std::string csv = "vertex_id,symbol\n";
    for (int v = 0; v < tree.vertex_count(); ++v)
      csv += std::to_string(v) + "," + std::to_string(config.symbols[v]) + "\n";
    write_output(g.out, csv);
    return 0;
  }

  if (*measure) {
    Channel m = channel_from_json(resolve_text(channel_arg));
    DivergenceEstimate est;
    if (quantity == "census_tv") {
      est.value = census_total_variation(exact_census_distribution(ms_b, ms_depth, m, ms_i),
                                         exact_census_distribution(ms_b, ms_depth, m, ms_j));
      est.method = EstimateMethod::exact;
    } else if (ms_exact && (quantity == "tv" || quantity == "chi2" || quantity == "mi")) {
      RootedTree tree = RootedTree::bary(ms_b, ms_depth);
      if (quantity == "mi") {
        std::vector<double> prior(m.size(), 1.0 / m.size());
        est.value = exact_mutual_information(tree, m, ms_depth, prior);
      } else {
        auto pi = exact_level_distribution(tree, m, ms_depth, ms_i);
        auto pj = exact_level_distribution(tree, m, ms_depth, ms_j);
        est.value = quantity == "tv" ? total_variation(pi, pj) : chi_square_distance(pi, pj);
      }
      est.method = EstimateMethod::exact;
    } else {
      RootedTree tree = RootedTree::bary(ms_b, ms_depth);
      if (quantity == "tv")
        est = mc_total_variation(tree, m, ms_depth, ms_i, ms_j, ms_samples, g.seed, g.threads);
      else if (quantity == "chi2")
        est = mc_chi_square(tree, m, ms_depth, ms_i, ms_j, ms_samples, g.seed, g.threads);
      else if (quantity == "mi") {
        std::vector<double> prior(m.size(), 1.0 / m.size());
        est = mc_mutual_information(tree, m, ms_depth, prior, ms_samples, g.seed, g.threads);
      } else if (quantity == "tv_lower_bound") {
        auto test = make_reconstruction_test(test_name, ms_depth, ms_i, ms_j);
        est = tv_lower_bound_from_test(tree, m, ms_depth, ms_i, ms_j, test, ms_samples, g.seed,
                                       g.threads);
        est.value = std::min(1.0, std::max(0.0, est.value));  // clamp in reporting
      } else {
        fail(Errc::bad_config, "unknown quantity '" + quantity + "'");
      }
    }
    if (quantity == "mi" && ms_bits) {
      est.value /= std::log(2.0);
      est.std_error /= std::log(2.0);
    }
    write_output(g.out, estimate_to_json(est));
    return 0;
  }

  if (*census_cmd) {
    Channel m = channel_from_json(resolve_text(channel_arg));
    RootedTree tree = RootedTree::bary(ce_b, ce_depth);
    SpectralData sd = spectral(m);
    auto spec = EstimatorSpec::for_level(tree, sd, ce_depth);
    auto lv = tree.level(ce_depth);
    double reff = ce_depth == 0 ? 0.0
                                : effective_resistance(tree,
                                                       ResistanceProfile::from_lambda(sd.lambda2),
                                                       std::vector<int>(lv.begin(), lv.end()));
    auto moments = estimator_moments_mc(tree, m, spec, ce_root, ce_samples, g.seed, g.threads);
    json j;
    j["mean"] = {{"re", moments.mean.real()}, {"im", moments.mean.imag()}};
    j["mean_std_error"] = moments.mean_std_error;
    j["second_moment"] = moments.second_moment;
    j["second_moment_std_error"] = moments.second_moment_std_error;
    j["n_samples"] = moments.n_samples;
    j["effective_resistance"] = reff;
    j["second_moment_bound"] = 1.0 + reff;
    write_output(g.out, j.dump(2));
    if (!flow_out.empty()) {
      std::string csv = "child_vertex_id,flow\n";
      for (int v = 1; v < tree.vertex_count(); ++v)
        if (spec.flow().flow[v] != 0.0)
          csv += std::to_string(v) + "," + format_double(spec.flow().flow[v]) + "\n";
      std::ofstream fout(flow_out);
      require(fout.good(), Errc::bad_config, "cannot write " + flow_out);
      fout << csv;
    }
    return 0;
  }

  if (*fs_verify) {
    auto spec = fieldshare::ShareChannelSpec::make(fs_q, fs_b, fs_points);
    auto report = fieldshare::verify_zero_boundary_information(spec);
    json j = json::parse(fieldshare::report_to_json(report));
    auto counts = fieldshare::pair_counts(spec);
    j["pair_counts"] = {{"diag", counts.n[0][0]}, {"off_diag", counts.n[0][1]}};
    bool orbit_ok = fieldshare::orbit_partition(spec) ==
                    indistinguishability_partition(fieldshare::materialize_channel(spec));
    j["orbits_match_indistinguishability"] = orbit_ok;
    bool pass = report.pass && counts.n[0][0] > counts.n[0][1] && orbit_ok;
    j["pass"] = pass;
    write_output(g.out, j.dump(2));
    return pass ? 0 : 3;
  }

  if (*sweep) {
    ExperimentSpec spec = experiment_from_json_or_manifest(resolve_text(config_arg));
    if (!g.out.empty()) spec.out_path = g.out;
    auto records = run_experiment(spec, g.threads);
    if (spec.out_path.empty())
      std::cout << records_to_csv(records);
    else
      std::cout << records.size() << " records -> " << spec.out_path << ".csv\n";
    return 0;
  }

  if (*verify) {
    require(level_arg == "quick" || level_arg == "full", Errc::bad_config,
            "--level must be quick or full");
    FaultInjection fault;
    fault.corrupt_stochasticity = inject == "stochasticity";
    auto results = run_acceptance_checks(
        level_arg == "full" ? VerifyLevel::full : VerifyLevel::quick, g.threads, only,
        inject.empty() ? nullptr : &fault);
    bool all_pass = true;
    for (const auto& r : results) {
      std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " ("
                << format_double(r.wall_seconds) << "s) " << r.detail << "\n";
      all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 3;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const treeflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
