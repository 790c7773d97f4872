// hbi-lab: capacity and rate-distortion solvers, bound witnesses, and
// supervision-channel experiment sweeps with machine-readable output.
//
// Exit codes: 0 success, 1 usage error, 2 validation error,
//             3 solver non-convergence, 4 witness violation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hbi/hbi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitWitnessFailure = 4;

json parse_json_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) {
    throw hbi::NotFound(std::string(what) + " not found");
  }
  json j = json::parse(hbi::io::read_file(path), nullptr, false);
  if (j.is_discarded()) {
    throw hbi::ConfigError(std::string("invalid JSON in ") + path);
  }
  return j;
}

std::vector<double> parse_slopes(const std::string& arg) {
  if (arg == "auto") return hbi::info::auto_slopes();
  std::vector<double> slopes;
  std::string token;
  std::istringstream is(arg);
  while (std::getline(is, token, ',')) {
    if (token.empty()) continue;
    slopes.push_back(std::stod(token));
  }
  if (slopes.empty()) throw hbi::ConfigError("no slopes given");
  return slopes;
}

int cmd_capacity(const std::string& channel_path, double tol, long max_iter,
                 const std::string& out_path) {
  auto ch = hbi::io::channel_from_json(parse_json_file(channel_path, "channel file"));
  auto result = hbi::info::channel_capacity_ba(ch, tol, max_iter);
  if (!out_path.empty()) {
    json j{{"capacity_bits", hbi::io::round6(result.capacity_bits)},
           {"iterations", result.iterations},
           {"gap", result.gap},
           {"optimal_input", hbi::io::to_json(result.optimal_input)}};
    hbi::io::atomic_write(out_path, j.dump(2) + "\n");
  }
  std::printf("capacity_bits=%s\n", hbi::io::format6(result.capacity_bits).c_str());
  return kExitOk;
}

int cmd_rd(const std::string& source_path, const std::string& distortion,
           const std::string& slopes_arg, const std::string& out_path) {
  auto source =
      hbi::io::distribution_from_json(parse_json_file(source_path, "source file"));
  std::vector<std::vector<double>> dist;
  std::string dist_name;
  if (distortion == "hamming") {
    dist = hbi::info::hamming_distortion(source.size());
    dist_name = "hamming";
  } else {
    auto j = parse_json_file(distortion, "distortion file");
    dist = j.at("matrix").get<std::vector<std::vector<double>>>();
    dist_name = j.value("name", "custom");
  }
  auto curve = hbi::info::rate_distortion_ba(source, dist, parse_slopes(slopes_arg),
                                             dist_name);
  if (!out_path.empty()) {
    hbi::io::atomic_write(out_path, hbi::io::to_json(curve).dump(2) + "\n");
  }
  std::printf("points=%zu d_star=%s d_max=%s\n", curve.points.size(),
              hbi::io::format6(curve.d_star).c_str(),
              hbi::io::format6(curve.d_max).c_str());
  return kExitOk;
}

int cmd_mi(const std::string& joint_path, const std::string& a, const std::string& b,
           const std::string& given) {
  auto joint = hbi::io::joint_from_json(parse_json_file(joint_path, "joint file"));
  double bits;
  if (given.empty()) {
    bits = hbi::info::mutual_information(joint, a, b);
  } else {
    std::vector<std::string> cond;
    std::istringstream is(given);
    std::string token;
    while (std::getline(is, token, ',')) {
      if (!token.empty()) cond.push_back(token);
    }
    bits = hbi::info::conditional_mi(joint, a, b, cond);
  }
  std::printf("mi_bits=%s\n", hbi::io::format6(bits).c_str());
  return kExitOk;
}

int cmd_theorems_run_all(const std::string& out_path, std::size_t random_count,
                         std::uint64_t seed) {
  auto reports = hbi::witness::run_all_witnesses(random_count, seed);
  if (!out_path.empty()) {
    hbi::io::atomic_write(out_path, hbi::io::to_json(reports).dump(2) + "\n");
  }
  std::size_t satisfied = 0;
  for (const auto& r : reports) satisfied += r.satisfied ? 1 : 0;
  std::printf("witnesses=%zu satisfied=%zu\n", reports.size(), satisfied);
  return satisfied == reports.size() ? kExitOk : kExitWitnessFailure;
}

int cmd_sweep(const std::string& experiment, const std::string& config_path,
              const std::string& out_dir, int parallel) {
  if (!fs::exists(config_path)) throw hbi::NotFound("config not found");
  auto cfg = hbi::io::config_from_json(parse_json_file(config_path, "config"));
  const auto requested = hbi::sweep::experiment_from_name(experiment);
  if (requested != cfg.experiment) {
    throw hbi::ConfigError("config experiment does not match subcommand argument");
  }
  if (const char* env_seed = std::getenv("HBI_LAB_SEED")) {
    cfg.seeds = {static_cast<std::uint64_t>(std::stoull(env_seed))};
  }

  fs::create_directories(out_dir);
  if (requested == hbi::sweep::ExperimentKind::normalization_degeneracy) {
    auto rep = hbi::sweep::run_normalization_degeneracy(cfg);
    hbi::io::atomic_write(fs::path(out_dir) / "report.json",
                          hbi::io::to_json(rep).dump(2) + "\n");
    std::ostringstream audit;
    audit << "pair_id,s_h_true,s_h_false,s_a_true,s_a_false,z_h_gap,z_a_gap,"
             "hybrid_gap,human_correct,hybrid_correct\n";
    for (const auto& r : rep.audit) {
      audit << r.pair_id << ',' << hbi::io::format6(r.s_h_true) << ','
            << hbi::io::format6(r.s_h_false) << ',' << hbi::io::format6(r.s_a_true)
            << ',' << hbi::io::format6(r.s_a_false) << ','
            << hbi::io::format6(r.z_h_gap) << ',' << hbi::io::format6(r.z_a_gap)
            << ',' << hbi::io::format6(r.hybrid_gap) << ',' << r.human_correct
            << ',' << r.hybrid_correct << '\n';
    }
    hbi::io::atomic_write(fs::path(out_dir) / "audit.csv", audit.str());
    std::printf("pairs=%zu aux_only=%s human_only=%s hybrid=%s out=%s\n",
                rep.audit.size(), hbi::io::format6(rep.acc_aux_mean).c_str(),
                hbi::io::format6(rep.acc_human_mean).c_str(),
                hbi::io::format6(rep.acc_hybrid_mean).c_str(), out_dir.c_str());
    return kExitOk;
  }

  auto result = hbi::sweep::run_experiment(cfg, parallel);
  hbi::io::atomic_write(fs::path(out_dir) / "results.json",
                        hbi::io::to_json(result).dump(2) + "\n");
  hbi::io::atomic_write(fs::path(out_dir) / "results.csv",
                        hbi::io::results_csv(result));
  hbi::io::emit_plot_data(result, fs::path(out_dir) / "plots");
  std::printf("cells=%zu metrics=%zu out=%s\n", result.cells.size(),
              result.metric_names.size(), out_dir.c_str());
  return kExitOk;
}

int cmd_ingest_check(const std::string& scores_path, bool strict) {
  if (!fs::exists(scores_path)) throw hbi::NotFound("score file not found");
  auto scores = hbi::sweep::ingest_scores(scores_path, strict);
  for (const auto& e : scores.errors) {
    std::fprintf(stderr, "error: line %zu: %s\n", e.line, e.message.c_str());
  }
  std::printf("pairs=%zu errors=%zu s_h=%zu s_m=%zu s_a=%zu truth=%zu\n",
              scores.pairs.size(), scores.errors.size(), scores.counts.at("s_h"),
              scores.counts.at("s_m"), scores.counts.at("s_a"),
              scores.counts.at("truth"));
  return scores.errors.empty() ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervision-channel information bounds and experiment harness"};
  app.require_subcommand(1);

  // capacity
  std::string cap_channel, cap_out;
  double cap_tol = 1e-9;
  long cap_max_iter = 100000;
  auto* capacity = app.add_subcommand("capacity", "Blahut-Arimoto channel capacity");
  capacity->add_option("--channel", cap_channel, "channel JSON file")->required();
  capacity->add_option("--tol", cap_tol, "bracket tolerance in bits");
  capacity->add_option("--max-iter", cap_max_iter, "iteration cap");
  capacity->add_option("--out", cap_out, "optional JSON output path");

  // rd
  std::string rd_source, rd_distortion = "hamming", rd_slopes = "auto", rd_out;
  auto* rd = app.add_subcommand("rd", "rate-distortion curve for a discrete source");
  rd->add_option("--source", rd_source, "source distribution JSON file")->required();
  rd->add_option("--distortion", rd_distortion,
                 "'hamming' or a JSON file with a distortion matrix");
  rd->add_option("--slopes", rd_slopes, "'auto' or comma-separated negative slopes");
  rd->add_option("--out", rd_out, "curve JSON output path");

  // mi
  std::string mi_joint, mi_a, mi_b, mi_given;
  auto* mi = app.add_subcommand("mi", "mutual information from a joint distribution");
  mi->add_option("--joint", mi_joint, "joint distribution JSON file")->required();
  mi->add_option("--a", mi_a, "first axis name")->required();
  mi->add_option("--b", mi_b, "second axis name")->required();
  mi->add_option("--given", mi_given, "comma-separated conditioning axes");

  // theorems run-all
  auto* theorems = app.add_subcommand("theorems", "bound witnesses");
  theorems->require_subcommand(1);
  std::string th_out;
  std::size_t th_random = 0;
  std::uint64_t th_seed = 1;
  auto* run_all = theorems->add_subcommand("run-all", "run every witness");
  run_all->add_option("--out", th_out, "report JSON output path");
  run_all->add_option("--random", th_random, "random instances per witness");
  run_all->add_option("--seed", th_seed, "seed for random instances");

  // sweep
  std::string sw_experiment, sw_config, sw_out = "out";
  int sw_parallel = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "config-driven experiment sweep");
  sweep_cmd->add_option("experiment", sw_experiment,
                        "alpha|lambda|noise|scaling|sufficiency|normalization")
      ->required();
  sweep_cmd->add_option("--config", sw_config, "experiment config JSON")->required();
  sweep_cmd->add_option("--out", sw_out, "output directory");
  sweep_cmd->add_option("--parallel", sw_parallel, "worker threads for cells");

  // ingest-check
  std::string ig_scores;
  bool ig_strict = false;
  auto* ingest = app.add_subcommand("ingest-check", "validate a JSONL score file");
  ingest->add_option("--scores", ig_scores, "JSONL score file")->required();
  ingest->add_flag("--strict", ig_strict, "abort on the first malformed line");

  auto* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  try {
    if (capacity->parsed()) {
      return cmd_capacity(cap_channel, cap_tol, cap_max_iter, cap_out);
    }
    if (rd->parsed()) return cmd_rd(rd_source, rd_distortion, rd_slopes, rd_out);
    if (mi->parsed()) return cmd_mi(mi_joint, mi_a, mi_b, mi_given);
    if (theorems->parsed()) return cmd_theorems_run_all(th_out, th_random, th_seed);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sw_experiment, sw_config, sw_out, sw_parallel);
    }
    if (ingest->parsed()) return cmd_ingest_check(ig_scores, ig_strict);
    if (version->parsed()) {
      std::printf("%s\n", hbi::kVersion);
      return kExitOk;
    }
  } catch (const hbi::NonConvergence& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNonConvergence;
  } catch (const hbi::NotFound& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const hbi::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return kExitUsage;
}
