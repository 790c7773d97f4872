// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Usage: hbi_acceptance [path-to-hbi-lab-binary]

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hbi/hbi.hpp"

using namespace hbi;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

double h2(double p) { return info::binary_entropy(p); }

prob::Channel bsc(double p) {
  return prob::Channel{{"0", "1"}, {"0", "1"}, {{1.0 - p, p}, {p, 1.0 - p}}};
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// --- 1: information solvers against closed forms ---------------------------

void criterion_1() {
  bool ok = true;
  std::ostringstream detail;
  for (double p : {0.05, 0.1, 0.25}) {
    Timer t;
    auto res = info::channel_capacity_ba(bsc(p), 1e-9);
    const double secs = t.seconds();
    const double expect = 1.0 - h2(p);
    const double err = std::abs(res.capacity_bits - expect);
    if (err > 1e-6 || secs >= 1.0) ok = false;
    detail << "C(" << p << ") err=" << err << " t=" << secs << "s; ";
  }
  auto src = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto dist = info::hamming_distortion(2);
  for (double d : {0.05, 0.1, 0.2}) {
    Timer t;
    const double slope = -std::log2((1.0 - d) / d);
    auto curve = info::rate_distortion_ba(src, dist, {slope});
    const double secs = t.seconds();
    const auto& pt = curve.points.front();
    const double err = std::abs(pt.rate_bits - (1.0 - h2(d)));
    if (err > 1e-4 || std::abs(pt.distortion - d) > 1e-5 || secs >= 1.0) ok = false;
    detail << "R(" << d << ") err=" << err << " t=" << secs << "s; ";
  }
  report(1, "capacity and rate-distortion match closed forms", ok, detail.str());
}

// --- 2: chain rule and data-processing properties ---------------------------

void criterion_2() {
  prob::RngStream rng(20240811, 2);
  auto rand_source = [&](std::size_t n, const char* prefix) {
    std::vector<std::string> supp;
    for (std::size_t i = 0; i < n; ++i) supp.push_back(prefix + std::to_string(i));
    std::vector<double> w(n);
    for (auto& v : w) v = 0.05 + rng.next_double();
    return prob::make_distribution(w, supp);
  };
  auto rand_channel = [&](const std::vector<std::string>& in, std::size_t m,
                          const char* prefix) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < m; ++j) out.push_back(prefix + std::to_string(j));
    prob::Channel ch{in, out, {}};
    for (std::size_t i = 0; i < in.size(); ++i) {
      std::vector<double> row(m);
      double z = 0.0;
      for (auto& v : row) {
        v = 0.01 + rng.next_double();
        z += v;
      }
      for (auto& v : row) v /= z;
      ch.rows.push_back(row);
    }
    return ch;
  };

  bool ok = true;
  double worst_gap = 0.0, worst_slack = 1e9;
  for (int trial = 0; trial < 100; ++trial) {
    auto srcj = rand_source(2 + rng.next_index(2), "y");
    auto j = prob::joint_from_chain(
        srcj,
        {rand_channel(srcj.support, 2 + rng.next_index(2), "h"),
         rand_channel(srcj.support, 2 + rng.next_index(2), "m"),
         rand_channel(srcj.support, 2 + rng.next_index(2), "a")},
        prob::ChainStructure::fan_out);
    auto dec = info::chain_rule_decomposition(j);
    const double gap = std::abs(dec.c_mix - info::joint_signal_information(j));
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-9) ok = false;
  }
  for (int trial = 0; trial < 100; ++trial) {
    auto srcj = rand_source(2 + rng.next_index(4), "y");
    auto ch1 = rand_channel(srcj.support, 2 + rng.next_index(4), "s");
    auto ch2 = rand_channel(ch1.output_support, 2 + rng.next_index(4), "t");
    auto j = prob::joint_from_chain(srcj, {ch1, ch2}, prob::ChainStructure::chain);
    const double slack = info::verify_dpi(j);
    worst_slack = std::min(worst_slack, slack);
    if (slack < -1e-9) ok = false;
  }
  std::ostringstream detail;
  detail << "worst chain-rule gap=" << worst_gap << ", min DPI slack=" << worst_slack;
  report(2, "chain rule and DPI hold on random joints", ok, detail.str());
}

// --- 3: theorem witness suite ------------------------------------------------

void criterion_3() {
  Timer t;
  auto reports = witness::run_all_witnesses(/*random_count=*/25, /*seed=*/1);
  const double secs = t.seconds();
  bool ok = reports.size() == 6 * 26 && secs < 60.0;
  std::size_t satisfied = 0;
  for (const auto& rep : reports) satisfied += rep.satisfied ? 1 : 0;
  if (satisfied != reports.size()) ok = false;
  // Brute force equals the Bayes closed form exactly on every causal run.
  for (const auto& rep : reports) {
    if (rep.theorem_id == "causal" && rep.lhs != rep.rhs) ok = false;
  }
  std::ostringstream detail;
  detail << satisfied << "/" << reports.size() << " satisfied in " << secs << "s";
  report(3, "witness suite passes on fixed and random instances", ok, detail.str());
}

// --- 4: floor persistence under scaling --------------------------------------

void criterion_4() {
  auto cfg = sweep::default_config(sweep::ExperimentKind::scaling_sweep);
  auto res = sweep::run_scaling_sweep(cfg, 4);
  const double gamma = res.meta.at("gamma_h_analytic");
  const double tail = res.aggregate(16000.0, "excess_human").mean;

  auto control = cfg;
  control.task.human.bias.delta = {0.0, 0.0};
  auto res0 = sweep::run_scaling_sweep(control, 4);
  const double control_tail = res0.aggregate(16000.0, "excess_human").mean;

  const bool ok = gamma == 0.25 && tail >= 0.9 * gamma && tail <= 1.1 * gamma &&
                  control_tail < 0.02;
  std::ostringstream detail;
  detail << "excess@16000=" << tail << " in [" << 0.9 * gamma << ", " << 1.1 * gamma
         << "], control=" << control_tail;
  report(4, "human-only excess risk stays at the analytic floor", ok, detail.str());
}

// --- 5: alignment-error direction across alpha --------------------------------

void criterion_5() {
  auto cfg = sweep::default_config(sweep::ExperimentKind::alpha_sweep);
  auto res = sweep::run_alpha_sweep(cfg, 4);
  bool ok = true;
  double prev = -1.0;
  std::ostringstream detail;
  for (double a : cfg.grid) {
    const double mean = res.aggregate(a, "alignment_error").mean;
    if (mean < prev) ok = false;
    prev = mean;
    detail << mean << " ";
  }
  const double lo = res.aggregate(0.0, "alignment_error").mean;
  const double hi = res.aggregate(1.0, "alignment_error").mean;
  if (hi < 3.0 * lo) ok = false;
  detail << "(ratio " << hi / lo << ")";
  report(5, "alignment error is nondecreasing in alpha with a 3x endpoint gap", ok,
         detail.str());
}

// --- 6: sufficiency-proxy shape ------------------------------------------------

void criterion_6() {
  Timer t;
  auto cfg = sweep::default_config(sweep::ExperimentKind::sufficiency_proxy);
  auto res = sweep::run_sufficiency_proxy(cfg, 4);
  const double secs = t.seconds();
  bool ok = secs < 30.0;
  if (res.aggregate(0.0, "accuracy").mean != 1.0) ok = false;
  if (res.aggregate(0.25, "accuracy").mean != 1.0) ok = false;
  const double at_one = res.aggregate(1.0, "accuracy").mean;
  if (std::abs(at_one - (1.0 - cfg.task.e_h)) > 0.02) ok = false;
  double prev = 2.0;
  for (double a : cfg.grid) {
    const double acc = res.aggregate(a, "accuracy").mean;
    if (acc > prev + 1e-12) ok = false;
    prev = acc;
  }
  std::ostringstream detail;
  detail << "acc(0)=" << res.aggregate(0.0, "accuracy").mean
         << " acc(0.25)=" << res.aggregate(0.25, "accuracy").mean
         << " acc(1)=" << at_one << " t=" << secs << "s";
  report(6, "sufficiency proxy: exact collapse at low alpha, 1-e_h at alpha=1", ok,
         detail.str());
}

// --- 7: corruption mitigation sign ---------------------------------------------

void criterion_7() {
  auto cfg = sweep::default_config(sweep::ExperimentKind::noise_sweep);
  auto res = sweep::run_noise_sweep(cfg, 4);
  const auto& human = res.aggregate(0.4, "accuracy_human");
  const auto& hybrid = res.aggregate(0.4, "accuracy_hybrid");
  const double half = std::max(human.ci_hi - human.mean, hybrid.ci_hi - hybrid.mean);
  const double gap = hybrid.mean - human.mean;
  const bool ok = gap > half;
  std::ostringstream detail;
  detail << "hybrid=" << hybrid.mean << " human=" << human.mean << " gap=" << gap
         << " ci-half=" << half;
  report(7, "hybrid beats human-only under 40% label corruption", ok, detail.str());
}

// --- 8: lambda stability ---------------------------------------------------------

void criterion_8() {
  auto cfg = sweep::default_config(sweep::ExperimentKind::lambda_ablation);
  auto res = sweep::run_lambda_ablation(cfg, 4);
  const double spread = res.meta.at("accuracy_spread");
  const bool ok = spread <= 0.03;
  std::ostringstream detail;
  detail << "accuracy spread across lambda = " << spread;
  report(8, "accuracy is stable across the lambda grid", ok, detail.str());
}

// --- 9: normalization degeneracy report ------------------------------------------

void criterion_9() {
  auto cfg = sweep::default_config(sweep::ExperimentKind::normalization_degeneracy);
  auto rep = sweep::run_normalization_degeneracy(cfg);
  bool ok = rep.acc_aux_mean == 1.0;
  if (std::abs(rep.acc_human_mean - (1.0 - cfg.task.e_h)) > 0.02) ok = false;
  if (rep.audit.size() != cfg.n_test) ok = false;  // per-pair audit trail present
  for (const auto& row : rep.audit) {
    if (!std::isfinite(row.hybrid_gap)) ok = false;
  }
  std::ostringstream detail;
  detail << "aux=" << rep.acc_aux_mean << " human=" << rep.acc_human_mean
         << " hybrid=" << rep.acc_hybrid_mean << " audit-rows=" << rep.audit.size();
  report(9, "normalization study: exact auxiliary sufficiency with audit trail", ok,
         detail.str());
}

// --- 10: determinism and formats ---------------------------------------------

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& bin, const std::string& args) {
  const auto tmp = fs::temp_directory_path() /
                   ("hbi_acc_out_" + std::to_string(::getpid()));
  const int status = std::system((bin + " " + args + " >" + tmp.string()).c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(tmp);
  std::ostringstream os;
  os << in.rdbuf();
  r.out = os.str();
  fs::remove(tmp);
  return r;
}

void criterion_10(const std::string& bin) {
  bool ok = true;
  std::ostringstream detail;

  // In-process sweep determinism, serial vs parallel.
  auto cfg = sweep::default_config(sweep::ExperimentKind::sufficiency_proxy);
  cfg.n_test = 500;
  const auto a = io::to_json(sweep::run_sufficiency_proxy(cfg, 1)).dump();
  const auto b = io::to_json(sweep::run_sufficiency_proxy(cfg, 4)).dump();
  if (a != b) {
    ok = false;
    detail << "sweep rerun differed; ";
  }

  // JSONL ingestion round trip.
  const auto dir = fs::temp_directory_path() / "hbi_acc_ingest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto fixture = dir / "f.jsonl";
  {
    std::ofstream out(fixture);
    for (int i = 0; i < 20; ++i) {
      out << R"({"pair_id": "p)" << i << R"(", "s_h_a": )" << 0.1 * i
          << R"(, "s_h_b": 0.7, "s_a_a": 1, "s_a_b": 0, "label": "A", "truth": "B"})"
          << "\n";
    }
  }
  auto scores = sweep::ingest_scores(fixture.string(), true);
  if (scores.pairs.size() != 20 || scores.counts.at("s_h") != 20 ||
      scores.counts.at("s_a") != 20 || scores.counts.at("truth") != 20) {
    ok = false;
    detail << "ingest fixture mismatch; ";
  }
  auto swept = sweep::run_ingested_alpha_sweep(scores, {0.0, 0.5, 1.0}, 1.0);
  if (swept.cells.size() != 3) {
    ok = false;
    detail << "ingested sweep shape; ";
  }

  // Golden CLI output at six decimals, stable across runs.
  if (!bin.empty()) {
    const auto ch_path = dir / "bsc01.json";
    io::atomic_write(ch_path, io::to_json(bsc(0.1)).dump(2));
    auto r1 = run_cli(bin, "capacity --channel " + ch_path.string());
    auto r2 = run_cli(bin, "capacity --channel " + ch_path.string());
    if (r1.code != 0 || r1.out != "capacity_bits=0.531004\n" || r1.out != r2.out) {
      ok = false;
      detail << "golden capacity line mismatch (got '" << r1.out << "'); ";
    }
  } else {
    detail << "no CLI path given, golden check limited; ";
  }
  fs::remove_all(dir);

  detail << "byte-identical artifacts";
  report(10, "determinism and stable formats", ok, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string bin = argc > 1 ? argv[1] : "";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(bin);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
