#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hbi/digest.hpp"
#include "hbi/errors.hpp"
#include "hbi/learners.hpp"
#include "hbi/prob.hpp"
#include "hbi/supervision.hpp"

namespace hbi::sweep {

enum class ExperimentKind {
  alpha_sweep,
  lambda_ablation,
  noise_sweep,
  scaling_sweep,
  sufficiency_proxy,
  normalization_degeneracy,
};

inline std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::alpha_sweep: return "alpha_sweep";
    case ExperimentKind::lambda_ablation: return "lambda_ablation";
    case ExperimentKind::noise_sweep: return "noise_sweep";
    case ExperimentKind::scaling_sweep: return "scaling_sweep";
    case ExperimentKind::sufficiency_proxy: return "sufficiency_proxy";
    case ExperimentKind::normalization_degeneracy: return "normalization_degeneracy";
  }
  return "unknown";
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "alpha_sweep" || name == "alpha") return ExperimentKind::alpha_sweep;
  if (name == "lambda_ablation" || name == "lambda") return ExperimentKind::lambda_ablation;
  if (name == "noise_sweep" || name == "noise") return ExperimentKind::noise_sweep;
  if (name == "scaling_sweep" || name == "scaling") return ExperimentKind::scaling_sweep;
  if (name == "sufficiency_proxy" || name == "sufficiency") return ExperimentKind::sufficiency_proxy;
  if (name == "normalization_degeneracy" || name == "normalization") {
    return ExperimentKind::normalization_degeneracy;
  }
  throw ConfigError("unknown experiment: " + name);
}

enum class AuxKind { exact, noisy, indicator };

/// Synthetic task description: a known linear target on standard-normal
/// features, a human channel given by a SupervisionSpec, and an auxiliary
/// channel. Indicator-style generators (sufficiency, normalization) use the
/// margin/error-rate fields instead.
struct TaskConfig {
  std::size_t dim = 8;
  sup::SupervisionSpec human;
  AuxKind aux = AuxKind::exact;
  double aux_sigma = 0.0;
  double e_h = 0.3;           ///< target human error rate (indicator tasks)
  double margin_lo = 0.2;     ///< human margin magnitude range (indicator tasks)
  double margin_hi = 2.0;
  bool degenerate_aux = false;  ///< auxiliary indicator constant across the batch
  std::string ingest_path;      ///< nonempty: score pairs from a JSONL file
};

struct ExperimentConfig {
  int schema = 1;
  ExperimentKind experiment = ExperimentKind::alpha_sweep;
  TaskConfig task;
  std::vector<double> grid;
  double alpha = 0.5;   ///< fixed mixing weight where the grid is not alpha
  double lambda = 1.0;  ///< fixed auxiliary scale where the grid is not lambda
  std::size_t n_train = 5000;
  std::size_t n_test = 1000;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  learn::TrainConfig train;

  void validate() const {
    if (schema != 1) throw ConfigError("unsupported config schema");
    if (grid.empty()) throw ConfigError("grid must be nonempty");
    if (seeds.empty()) throw ConfigError("seeds must be nonempty");
    if (n_test < 100) throw ConfigError("n_test must be >= 100");
    task.human.validate();
    train.validate();
  }

  std::string canonical_string() const {
    std::ostringstream os;
    os.precision(17);
    os << experiment_name(experiment) << '|' << task.dim << '|'
       << static_cast<int>(task.human.noise.kind) << ':' << task.human.noise.scale << '|'
       << static_cast<int>(task.human.bias.kind);
    for (double v : task.human.bias.delta) os << ',' << v;
    os << '|';
    for (double v : task.human.quantizer.edges) os << ',' << v;
    os << '|' << static_cast<int>(task.aux) << ':' << task.aux_sigma << '|' << task.e_h
       << ':' << task.margin_lo << ':' << task.margin_hi << ':' << task.degenerate_aux
       << '|' << task.ingest_path << '|';
    for (double v : grid) os << v << ',';
    os << '|' << alpha << '|' << lambda << '|' << n_train << '|' << n_test << '|';
    for (auto s : seeds) os << s << ',';
    os << '|' << train.learning_rate << ':' << train.epochs << ':' << train.l2 << ':'
       << train.batch_size << ':' << train.seed;
    return os.str();
  }

  std::string digest() const { return digest_of(canonical_string()); }
};

/// Per-experiment defaults: the synthetic task from the protocol
/// (d = 8, unit-norm target, standard normal features, 5000/1000 pairs)
/// plus a channel configuration tuned for each study.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.train.learning_rate = 1.0;
  cfg.train.epochs = 300;
  cfg.train.l2 = 1e-4;

  auto pair_channel_defaults = [&] {
    cfg.task.dim = 8;
    cfg.task.human.noise = {sup::NoiseKind::gaussian, 0.4};
    cfg.task.human.bias.kind = sup::BiasKind::linear;
    cfg.task.human.bias.delta = {0.18, -0.12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    cfg.task.human.quantizer.edges = {-4.0, -1.0, 0.0, 1.0, 4.0};
    cfg.task.aux = AuxKind::exact;
  };

  switch (kind) {
    case ExperimentKind::alpha_sweep:
      pair_channel_defaults();
      cfg.grid = {0.0, 0.25, 0.5, 0.75, 1.0};
      break;
    case ExperimentKind::lambda_ablation:
      pair_channel_defaults();
      cfg.grid = {0.5, 1.0, 2.0};
      cfg.alpha = 0.5;
      break;
    case ExperimentKind::noise_sweep:
      pair_channel_defaults();
      cfg.grid = {0.0, 0.2, 0.4};
      cfg.alpha = 0.5;
      break;
    case ExperimentKind::scaling_sweep:
      cfg.task.dim = 2;
      cfg.task.human.noise = {sup::NoiseKind::gaussian, 0.1};
      cfg.task.human.bias.kind = sup::BiasKind::linear;
      cfg.task.human.bias.delta = {0.5, 0.0};
      cfg.task.aux = AuxKind::exact;
      cfg.grid = {2000, 4000, 8000, 16000};
      cfg.alpha = 0.5;
      break;
    case ExperimentKind::sufficiency_proxy:
      cfg.task.e_h = 0.3;
      cfg.grid = {0.0, 0.25, 0.5, 0.75, 1.0};
      cfg.n_test = 2000;
      break;
    case ExperimentKind::normalization_degeneracy:
      cfg.task.e_h = 0.52;
      cfg.grid = {0.5};
      cfg.alpha = 0.5;
      cfg.n_test = 2000;
      break;
  }
  return cfg;
}

struct SweepCell {
  double param = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
};

struct Aggregate {
  double param = 0.0;
  std::string metric;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool single_seed = false;
};

struct SweepResult {
  std::string experiment;
  std::vector<std::string> metric_names;
  std::vector<SweepCell> cells;
  std::vector<Aggregate> aggregates;
  std::map<std::string, double> meta;
  std::string config_digest;

  const Aggregate& aggregate(double param, const std::string& metric) const {
    for (const auto& a : aggregates) {
      if (a.metric == metric && a.param == param) return a;
    }
    throw ShapeError("no aggregate for metric " + metric);
  }
};

/// Mean and 95% normal-approximation CI (1.96 * population std / sqrt(k))
/// per (param, metric); single-seed cells get a zero-width flagged interval.
inline std::vector<Aggregate> summarize(const std::vector<SweepCell>& cells) {
  std::vector<double> params;
  for (const auto& c : cells) {
    if (std::find(params.begin(), params.end(), c.param) == params.end()) {
      params.push_back(c.param);
    }
  }
  std::vector<Aggregate> out;
  for (double p : params) {
    std::map<std::string, std::vector<double>> samples;
    for (const auto& c : cells) {
      if (c.param == p) {
        for (const auto& [k, v] : c.metrics) samples[k].push_back(v);
      }
    }
    for (const auto& [metric, vals] : samples) {
      if (vals.empty()) throw EmptyEval("no cells for param");
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size());
      const double half = vals.size() > 1
                              ? 1.96 * std::sqrt(var / static_cast<double>(vals.size()))
                              : 0.0;
      out.push_back(Aggregate{p, metric, mean, mean - half, mean + half,
                              vals.size() == 1});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic pair generator shared by the training-based sweeps.
// ---------------------------------------------------------------------------

namespace detail {

// Substream purposes; data is shared across grid values within a seed so
// that grid cells are matched instances (common random numbers).
inline constexpr std::uint64_t kSaltW = 0x11;
inline constexpr std::uint64_t kSaltTrainFeat = 0x22;
inline constexpr std::uint64_t kSaltTrainNoiseH = 0x33;
inline constexpr std::uint64_t kSaltTrainNoiseA = 0x44;
inline constexpr std::uint64_t kSaltTestFeat = 0x55;
inline constexpr std::uint64_t kSaltCorrupt = 0x66;
inline constexpr std::uint64_t kSaltMargin = 0x77;
inline constexpr std::uint64_t kSaltWrong = 0x88;

struct PairDataset {
  std::vector<double> w;  ///< latent unit-norm target direction
  std::vector<sup::PreferencePair> train;
  std::vector<sup::PreferencePair> test;
};

inline std::vector<double> unit_weights(std::size_t dim, prob::RngStream& rng) {
  std::vector<double> w(dim);
  double norm = 0.0;
  for (auto& v : w) {
    v = rng.next_gaussian();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : w) v /= norm;
  return w;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Candidate pairs with latent scores r* = w'phi, human scores through the
/// supervision spec, and auxiliary scores per the aux channel. The stored
/// label is the (uncorrupted) human preference.
inline PairDataset make_pair_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  PairDataset ds;
  prob::RngStream w_rng = prob::derive_stream(seed, kSaltW);
  ds.w = unit_weights(cfg.task.dim, w_rng);

  auto gen_block = [&](std::size_t count, std::uint64_t feat_salt,
                       std::uint64_t noise_h_salt, std::uint64_t noise_a_salt,
                       const char* prefix) {
    std::vector<sup::PreferencePair> pairs;
    prob::RngStream feat = prob::derive_stream(seed, feat_salt);
    prob::RngStream noise_h = prob::derive_stream(seed, noise_h_salt);
    prob::RngStream noise_a = prob::derive_stream(seed, noise_a_salt);
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      sup::PreferencePair p;
      p.pair_id = std::string(prefix) + std::to_string(i);
      p.features_a.resize(cfg.task.dim);
      p.features_b.resize(cfg.task.dim);
      for (auto& v : p.features_a) v = feat.next_gaussian();
      for (auto& v : p.features_b) v = feat.next_gaussian();
      const double ra = dot(ds.w, p.features_a);
      const double rb = dot(ds.w, p.features_b);
      p.truth = ra >= rb ? sup::Side::A : sup::Side::B;
      p.s_h_a = sup::apply_decomposition(ra, p.features_a, cfg.task.human, noise_h).value;
      p.s_h_b = sup::apply_decomposition(rb, p.features_b, cfg.task.human, noise_h).value;
      switch (cfg.task.aux) {
        case AuxKind::exact:
          p.s_a_a = ra;
          p.s_a_b = rb;
          break;
        case AuxKind::noisy:
          p.s_a_a = ra + cfg.task.aux_sigma * noise_a.next_gaussian();
          p.s_a_b = rb + cfg.task.aux_sigma * noise_a.next_gaussian();
          break;
        case AuxKind::indicator:
          p.s_a_a = ra >= rb ? 1.0 : 0.0;
          p.s_a_b = ra >= rb ? 0.0 : 1.0;
          break;
      }
      p.label = *p.s_h_a >= *p.s_h_b ? sup::Side::A : sup::Side::B;
      pairs.push_back(std::move(p));
    }
    return pairs;
  };

  ds.train = gen_block(cfg.n_train, kSaltTrainFeat, kSaltTrainNoiseH,
                       kSaltTrainNoiseA, "tr");
  ds.test = gen_block(cfg.n_test, kSaltTestFeat, kSaltTestFeat ^ 0x1,
                      kSaltTestFeat ^ 0x2, "te");
  return ds;
}

/// Training labels induced by the mixed score difference
/// alpha * d_h + (1 - alpha) * lambda * d_a.
inline std::vector<sup::PreferencePair> label_by_mixture(
    const std::vector<sup::PreferencePair>& pairs, double alpha, double lambda) {
  std::vector<sup::PreferencePair> out = pairs;
  for (auto& p : out) {
    const double d_h = *p.s_h_a - *p.s_h_b;
    const double d_a = *p.s_a_a - *p.s_a_b;
    const double mix = alpha * d_h + (1.0 - alpha) * lambda * d_a;
    p.label = mix >= 0.0 ? sup::Side::A : sup::Side::B;
  }
  return out;
}

/// As label_by_mixture but the human contribution is the (possibly
/// corrupted) preference direction carrying the original confidence
/// magnitude |d_h|.
inline std::vector<sup::PreferencePair> label_by_mixture_corrupted(
    const std::vector<sup::PreferencePair>& pairs, double alpha, double lambda) {
  std::vector<sup::PreferencePair> out = pairs;
  for (auto& p : out) {
    const double d_h = *p.s_h_a - *p.s_h_b;
    const double d_h_eff = std::abs(d_h) * (p.label == sup::Side::A ? 1.0 : -1.0);
    const double d_a = *p.s_a_a - *p.s_a_b;
    const double mix = alpha * d_h_eff + (1.0 - alpha) * lambda * d_a;
    p.label = mix >= 0.0 ? sup::Side::A : sup::Side::B;
  }
  return out;
}

struct PairMetrics {
  double pairwise_accuracy = 0.0;
  double alignment_error = 0.0;      ///< after least-squares scale matching
  double alignment_error_raw = 0.0;  ///< plain ||w_hat - w||
  double distortion_norm = 0.0;      ///< RMS score deviation after matching
};

inline PairMetrics evaluate_model(const learn::LinearModel& model,
                                  const PairDataset& ds) {
  PairMetrics m;
  auto scorer = [&](std::span<const double> x) { return model.score(x); };
  m.pairwise_accuracy =
      learn::pairwise_accuracy(scorer, ds.test, learn::Against::truth);

  const std::size_t d = ds.w.size();
  double ww = 0.0, wh = 0.0, raw = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double hw = model.weights[static_cast<long>(i)];
    ww += hw * hw;
    wh += hw * ds.w[i];
    raw += (hw - ds.w[i]) * (hw - ds.w[i]);
  }
  const double scale = ww > 0.0 ? wh / ww : 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = scale * model.weights[static_cast<long>(i)] - ds.w[i];
    err += diff * diff;
  }
  m.alignment_error = std::sqrt(err);
  m.alignment_error_raw = std::sqrt(raw);

  double sq = 0.0;
  std::size_t count = 0;
  for (const auto& p : ds.test) {
    const double pa = scale * model.score(p.features_a) - dot(ds.w, p.features_a);
    const double pb = scale * model.score(p.features_b) - dot(ds.w, p.features_b);
    sq += pa * pa + pb * pb;
    count += 2;
  }
  m.distortion_norm = std::sqrt(sq / static_cast<double>(count));
  return m;
}

/// Runs cell jobs (possibly in parallel) and assembles a SweepResult whose
/// cell order is (param index, seed index) regardless of scheduling.
template <typename Job>
inline SweepResult run_cells(const ExperimentConfig& cfg,
                             const std::vector<std::string>& metric_names,
                             Job&& job, int parallel) {
  SweepResult res;
  res.experiment = experiment_name(cfg.experiment);
  res.metric_names = metric_names;
  res.config_digest = cfg.digest();

  const std::size_t total = cfg.grid.size() * cfg.seeds.size();
  res.cells.resize(total);
  auto run_one = [&](std::size_t flat) {
    const std::size_t gi = flat / cfg.seeds.size();
    const std::size_t si = flat % cfg.seeds.size();
    SweepCell cell;
    cell.param = cfg.grid[gi];
    cell.seed = cfg.seeds[si];
    cell.metrics = job(gi, si);
    res.cells[flat] = std::move(cell);
  };

  if (parallel <= 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= total) return;
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    const int k = std::min<int>(parallel, static_cast<int>(total));
    threads.reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  res.aggregates = summarize(res.cells);
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep runners.
// ---------------------------------------------------------------------------

/// Dedicated human-only pipeline (labels straight from the human channel);
/// the alpha=1 hybrid cell must reproduce these metrics bit for bit.
inline detail::PairMetrics run_human_only_cell(const ExperimentConfig& cfg,
                                               std::uint64_t seed) {
  auto ds = detail::make_pair_dataset(cfg, seed);
  auto model = learn::fit_bradley_terry(ds.train, cfg.train);
  return detail::evaluate_model(model, ds);
}

/// Hybrid-label alpha sweep: trains a Bradley-Terry model on labels induced
/// by S_alpha and evaluates against the latent target.
inline SweepResult run_alpha_sweep(const ExperimentConfig& cfg, int parallel = 1) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::alpha_sweep) {
    throw ConfigError("config is not an alpha_sweep");
  }
  for (double a : cfg.grid) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha grid must lie in [0,1]");
  }
  return detail::run_cells(
      cfg,
      {"pairwise_accuracy", "alignment_error", "alignment_error_raw", "distortion_norm"},
      [&](std::size_t gi, std::size_t si) {
        const double alpha = cfg.grid[gi];
        auto ds = detail::make_pair_dataset(cfg, cfg.seeds[si]);
        auto labeled = detail::label_by_mixture(ds.train, alpha, cfg.lambda);
        auto model = learn::fit_bradley_terry(labeled, cfg.train);
        auto m = detail::evaluate_model(model, ds);
        return std::map<std::string, double>{
            {"pairwise_accuracy", m.pairwise_accuracy},
            {"alignment_error", m.alignment_error},
            {"alignment_error_raw", m.alignment_error_raw},
            {"distortion_norm", m.distortion_norm}};
      },
      parallel);
}

/// Lambda ablation at fixed alpha; meta carries the max-min spread of the
/// mean accuracy across the lambda grid.
inline SweepResult run_lambda_ablation(const ExperimentConfig& cfg, int parallel = 1) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::lambda_ablation) {
    throw ConfigError("config is not a lambda_ablation");
  }
  auto res = detail::run_cells(
      cfg,
      {"pairwise_accuracy", "alignment_error", "alignment_error_raw", "distortion_norm"},
      [&](std::size_t gi, std::size_t si) {
        const double lambda = cfg.grid[gi];
        auto ds = detail::make_pair_dataset(cfg, cfg.seeds[si]);
        auto labeled = detail::label_by_mixture(ds.train, cfg.alpha, lambda);
        auto model = learn::fit_bradley_terry(labeled, cfg.train);
        auto m = detail::evaluate_model(model, ds);
        return std::map<std::string, double>{
            {"pairwise_accuracy", m.pairwise_accuracy},
            {"alignment_error", m.alignment_error},
            {"alignment_error_raw", m.alignment_error_raw},
            {"distortion_norm", m.distortion_norm}};
      },
      parallel);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double p : cfg.grid) {
    const double mean = res.aggregate(p, "pairwise_accuracy").mean;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  res.meta["accuracy_spread"] = hi - lo;
  return res;
}

/// Label-corruption sweep: flips the human preference with probability gamma
/// (flip sets nest across gamma via a per-seed corruption stream), then
/// trains a human-only and a hybrid model on the corrupted signal.
inline SweepResult run_noise_sweep(const ExperimentConfig& cfg, int parallel = 1) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::noise_sweep) {
    throw ConfigError("config is not a noise_sweep");
  }
  for (double g : cfg.grid) {
    if (!(g >= 0.0 && g <= 0.5)) throw ConfigError("gamma grid must lie in [0, 0.5]");
  }
  return detail::run_cells(
      cfg, {"accuracy_human", "accuracy_hybrid"},
      [&](std::size_t gi, std::size_t si) {
        const double gamma = cfg.grid[gi];
        const std::uint64_t seed = cfg.seeds[si];
        auto ds = detail::make_pair_dataset(cfg, seed);

        prob::RngStream corrupt_rng = prob::derive_stream(seed, detail::kSaltCorrupt);
        auto corrupted =
            sup::corrupt_labels(ds.train, sup::CorruptionSpec{gamma}, corrupt_rng);

        auto human_model = learn::fit_bradley_terry(corrupted, cfg.train);
        auto hybrid_labeled =
            detail::label_by_mixture_corrupted(corrupted, cfg.alpha, cfg.lambda);
        auto hybrid_model = learn::fit_bradley_terry(hybrid_labeled, cfg.train);

        auto acc = [&](const learn::LinearModel& m) {
          return learn::pairwise_accuracy(
              [&](std::span<const double> x) { return m.score(x); }, ds.test,
              learn::Against::truth);
        };
        return std::map<std::string, double>{{"accuracy_human", acc(human_model)},
                                             {"accuracy_hybrid", acc(hybrid_model)}};
      },
      parallel);
}

/// Scalar-supervision scaling sweep: least-squares fits at increasing N under
/// the biased channel; excess risk is the exact population quantity
/// ||w_hat - w||^2 on isotropic inputs. The analytic floor of the configured
/// instance is ||delta||^2 (identity quantizer).
inline SweepResult run_scaling_sweep(const ExperimentConfig& cfg, int parallel = 1) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::scaling_sweep) {
    throw ConfigError("config is not a scaling_sweep");
  }
  for (std::size_t i = 1; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i] > cfg.grid[i - 1])) throw ConfigError("N grid must increase");
  }
  auto res = detail::run_cells(
      cfg, {"excess_human", "excess_hybrid", "excess_aux"},
      [&](std::size_t gi, std::size_t si) {
        const auto n = static_cast<std::size_t>(cfg.grid[gi]);
        const std::uint64_t seed = cfg.seeds[si];
        const std::uint64_t cell = 0x5C000 + gi;

        prob::RngStream w_rng = prob::derive_stream(seed, detail::kSaltW);
        auto w = detail::unit_weights(cfg.task.dim, w_rng);
        prob::RngStream rng = prob::derive_stream(seed, cell);
        prob::RngStream aux_rng = prob::derive_stream(seed, cell ^ 0xA0A0);

        const std::size_t d = cfg.task.dim;
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd s_h(n), s_a(n);
        std::vector<double> row(d);
        for (std::size_t i = 0; i < n; ++i) {
          double y = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            row[k] = rng.next_gaussian();
            x(static_cast<long>(i), static_cast<long>(k)) = row[k];
            y += w[k] * row[k];
          }
          s_h[static_cast<long>(i)] =
              sup::apply_decomposition(y, row, cfg.task.human, rng).value;
          switch (cfg.task.aux) {
            case AuxKind::exact:
              s_a[static_cast<long>(i)] = y;
              break;
            case AuxKind::noisy:
              s_a[static_cast<long>(i)] =
                  y + cfg.task.aux_sigma * aux_rng.next_gaussian();
              break;
            case AuxKind::indicator:
              throw ConfigError("indicator auxiliary has no scalar target");
          }
        }
        Eigen::VectorXd s_mix =
            cfg.alpha * s_h + (1.0 - cfg.alpha) * cfg.lambda * s_a;

        auto excess = [&](const Eigen::VectorXd& target) {
          auto model = learn::fit_least_squares(x, target, cfg.train.l2);
          double e = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = model.weights[static_cast<long>(k)] - w[k];
            e += diff * diff;
          }
          return e;
        };
        return std::map<std::string, double>{{"excess_human", excess(s_h)},
                                             {"excess_hybrid", excess(s_mix)},
                                             {"excess_aux", excess(s_a)}};
      },
      parallel);
  double gamma = 0.0;
  for (double v : cfg.task.human.bias.delta) gamma += v * v;
  res.meta["gamma_h_analytic"] = gamma;
  res.meta["quantizer_active"] = cfg.task.human.quantizer.identity() ? 0.0 : 1.0;
  return res;
}

/// Scoring-only sufficiency proxy: pairs of one objectively correct and one
/// incorrect candidate, a binary auxiliary indicator, and a human channel
/// with target error rate e_h and bounded margins. No training involved.
inline SweepResult run_sufficiency_proxy(const ExperimentConfig& cfg, int parallel = 1) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::sufficiency_proxy) {
    throw ConfigError("config is not a sufficiency_proxy");
  }
  return detail::run_cells(
      cfg, {"accuracy"},
      [&](std::size_t gi, std::size_t si) {
        const double alpha = cfg.grid[gi];
        const std::uint64_t seed = cfg.seeds[si];
        prob::RngStream margin_rng = prob::derive_stream(seed, detail::kSaltMargin);
        prob::RngStream wrong_rng = prob::derive_stream(seed, detail::kSaltWrong);

        double correct = 0.0;
        for (std::size_t i = 0; i < cfg.n_test; ++i) {
          const double m = cfg.task.margin_lo +
                           (cfg.task.margin_hi - cfg.task.margin_lo) *
                               margin_rng.next_double();
          const bool wrong = wrong_rng.next_bernoulli(cfg.task.e_h);
          const double d_h = wrong ? -m : m;  // human margin toward the truth
          const double s_h_true = 0.5 * d_h, s_h_false = -0.5 * d_h;
          const double via_true = sup::hybrid_score_binary(alpha, s_h_true, 1.0);
          const double via_false = sup::hybrid_score_binary(alpha, s_h_false, 0.0);
          if (via_true > via_false) {
            correct += 1.0;
          } else if (via_true == via_false) {
            correct += 0.5;
          }
        }
        return std::map<std::string, double>{
            {"accuracy", correct / static_cast<double>(cfg.n_test)}};
      },
      parallel);
}

// ---------------------------------------------------------------------------
// Normalization degeneracy study.
// ---------------------------------------------------------------------------

struct NormalizationAuditRow {
  std::string pair_id;
  double s_h_true = 0.0, s_h_false = 0.0;
  double s_a_true = 0.0, s_a_false = 0.0;
  double z_h_gap = 0.0;      ///< z(s_h_true) - z(s_h_false)
  double z_a_gap = 0.0;
  double hybrid_gap = 0.0;   ///< alpha z_h gap + (1-alpha) z_a gap
  bool human_correct = false;
  bool hybrid_correct = false;
};

struct NormalizationReport {
  std::vector<double> acc_human_seeds;
  std::vector<double> acc_aux_seeds;
  std::vector<double> acc_hybrid_seeds;
  double acc_human_mean = 0.0;
  double acc_aux_mean = 0.0;
  double acc_hybrid_mean = 0.0;
  bool aux_degenerate = false;  ///< the auxiliary batch z-scored to zeros
  double hybrid_equals_human_fraction = 0.0;  ///< per-pair ranking agreement
  bool hybrid_equals_human_exact = false;
  std::string config_digest;
  std::vector<NormalizationAuditRow> audit;  ///< first seed, per pair
};

/// Batch z-scored hybrid of a continuous human channel with a binary
/// auxiliary indicator; reports human-only / auxiliary-only / hybrid
/// objective accuracies plus a per-pair audit trail. When the auxiliary
/// batch is constant (degenerate_aux) the z-scored auxiliary vanishes and
/// the hybrid ranking collapses onto the human one exactly.
inline NormalizationReport run_normalization_degeneracy(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::normalization_degeneracy) {
    throw ConfigError("config is not a normalization_degeneracy");
  }
  NormalizationReport rep;
  rep.config_digest = cfg.digest();

  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const std::uint64_t seed = cfg.seeds[si];
    prob::RngStream margin_rng = prob::derive_stream(seed, detail::kSaltMargin);
    prob::RngStream wrong_rng = prob::derive_stream(seed, detail::kSaltWrong);

    const std::size_t n = cfg.n_test;
    std::vector<double> h_scores(2 * n), a_scores(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = cfg.task.margin_lo +
                       (cfg.task.margin_hi - cfg.task.margin_lo) *
                           margin_rng.next_double();
      const bool wrong = wrong_rng.next_bernoulli(cfg.task.e_h);
      const double d_h = wrong ? -m : m;
      h_scores[2 * i] = 0.5 * d_h;       // objectively correct candidate
      h_scores[2 * i + 1] = -0.5 * d_h;  // incorrect candidate
      a_scores[2 * i] = 1.0;
      a_scores[2 * i + 1] = cfg.task.degenerate_aux ? 1.0 : 0.0;
    }
    auto zh = sup::zscore_normalize(h_scores);
    auto za = sup::zscore_normalize(a_scores);
    if (za.degenerate) rep.aux_degenerate = true;

    double acc_h = 0.0, acc_a = 0.0, acc_z = 0.0, agree = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dh = h_scores[2 * i] - h_scores[2 * i + 1];
      const double da = a_scores[2 * i] - a_scores[2 * i + 1];
      const double dz = cfg.alpha * (zh.values[2 * i] - zh.values[2 * i + 1]) +
                        (1.0 - cfg.alpha) * (za.values[2 * i] - za.values[2 * i + 1]);
      acc_h += dh > 0.0 ? 1.0 : (dh == 0.0 ? 0.5 : 0.0);
      acc_a += da > 0.0 ? 1.0 : (da == 0.0 ? 0.5 : 0.0);
      acc_z += dz > 0.0 ? 1.0 : (dz == 0.0 ? 0.5 : 0.0);
      const int sh = dh > 0.0 ? 1 : (dh < 0.0 ? -1 : 0);
      const int sz = dz > 0.0 ? 1 : (dz < 0.0 ? -1 : 0);
      if (sh == sz) agree += 1.0;
      if (si == 0) {
        NormalizationAuditRow row;
        row.pair_id = "p" + std::to_string(i);
        row.s_h_true = h_scores[2 * i];
        row.s_h_false = h_scores[2 * i + 1];
        row.s_a_true = a_scores[2 * i];
        row.s_a_false = a_scores[2 * i + 1];
        row.z_h_gap = zh.values[2 * i] - zh.values[2 * i + 1];
        row.z_a_gap = za.values[2 * i] - za.values[2 * i + 1];
        row.hybrid_gap = dz;
        row.human_correct = dh > 0.0;
        row.hybrid_correct = dz > 0.0;
        rep.audit.push_back(std::move(row));
      }
    }
    const double dn = static_cast<double>(n);
    rep.acc_human_seeds.push_back(acc_h / dn);
    rep.acc_aux_seeds.push_back(acc_a / dn);
    rep.acc_hybrid_seeds.push_back(acc_z / dn);
    rep.hybrid_equals_human_fraction += agree / dn;
  }
  const double k = static_cast<double>(cfg.seeds.size());
  for (double v : rep.acc_human_seeds) rep.acc_human_mean += v / k;
  for (double v : rep.acc_aux_seeds) rep.acc_aux_mean += v / k;
  for (double v : rep.acc_hybrid_seeds) rep.acc_hybrid_mean += v / k;
  rep.hybrid_equals_human_fraction /= k;
  rep.hybrid_equals_human_exact = rep.hybrid_equals_human_fraction == 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Score-file ingestion.
// ---------------------------------------------------------------------------

struct IngestError {
  std::size_t line = 0;
  std::string message;
};

struct IngestedScores {
  std::vector<sup::PreferencePair> pairs;
  std::string source_digest;
  std::map<std::string, std::size_t> counts;  ///< per-channel presence counts
  std::vector<IngestError> errors;
};

/// Reads the JSONL pair schema. In strict mode the first malformed line
/// throws; otherwise malformed lines are collected with their line numbers
/// and skipped.
inline IngestedScores ingest_scores(const std::string& path, bool strict = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score file: " + path);
  std::ostringstream whole;
  whole << in.rdbuf();
  const std::string content = whole.str();

  IngestedScores out;
  out.source_digest = digest_of(content);
  out.counts = {{"s_h", 0}, {"s_m", 0}, {"s_a", 0}, {"features", 0}, {"truth", 0}};

  std::map<std::string, std::size_t> id_lines;
  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& msg) {
      if (strict) throw SchemaError(msg, line_no);
      out.errors.push_back(IngestError{line_no, msg});
    };
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      fail("not a JSON object");
      continue;
    }
    if (!j.contains("pair_id") || !j["pair_id"].is_string()) {
      fail("missing required field: pair_id");
      continue;
    }
    if (!j.contains("label") || !j["label"].is_string() ||
        (j["label"] != "A" && j["label"] != "B")) {
      fail("missing or invalid required field: label");
      continue;
    }
    sup::PreferencePair p;
    p.pair_id = j["pair_id"].get<std::string>();
    if (id_lines.count(p.pair_id)) {
      const std::string msg = "duplicate pair_id: " + p.pair_id;
      if (strict) throw DuplicateId(msg + " (line " + std::to_string(line_no) + ")");
      out.errors.push_back(IngestError{line_no, msg});
      continue;
    }
    p.label = j["label"] == "A" ? sup::Side::A : sup::Side::B;
    if (j.contains("truth")) {
      if (!j["truth"].is_string() || (j["truth"] != "A" && j["truth"] != "B")) {
        fail("invalid truth field");
        continue;
      }
      p.truth = j["truth"] == "A" ? sup::Side::A : sup::Side::B;
      ++out.counts["truth"];
    }
    auto opt_num = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key)) return std::nullopt;
      if (!j[key].is_number()) throw SchemaError(std::string("non-numeric ") + key, line_no);
      return j[key].get<double>();
    };
    try {
      p.s_h_a = opt_num("s_h_a");
      p.s_h_b = opt_num("s_h_b");
      p.s_m_a = opt_num("s_m_a");
      p.s_m_b = opt_num("s_m_b");
      p.s_a_a = opt_num("s_a_a");
      p.s_a_b = opt_num("s_a_b");
      if (j.contains("features_a")) {
        p.features_a = j["features_a"].get<std::vector<double>>();
        p.features_b = j.value("features_b", std::vector<double>{});
        if (p.features_a.size() != p.features_b.size()) {
          fail("features_a/features_b length mismatch");
          continue;
        }
        ++out.counts["features"];
      }
    } catch (const SchemaError& e) {
      if (strict) throw;
      out.errors.push_back(IngestError{line_no, e.what()});
      continue;
    } catch (const nlohmann::json::exception& e) {
      if (strict) throw SchemaError(e.what(), line_no);
      out.errors.push_back(IngestError{line_no, e.what()});
      continue;
    }
    const bool has_h = p.s_h_a && p.s_h_b;
    const bool has_m = p.s_m_a && p.s_m_b;
    const bool has_a = p.s_a_a && p.s_a_b;
    if (!has_h && !has_m && !has_a) {
      fail("pair carries no score channel on both sides");
      continue;
    }
    if (has_h) ++out.counts["s_h"];
    if (has_m) ++out.counts["s_m"];
    if (has_a) ++out.counts["s_a"];
    id_lines[p.pair_id] = line_no;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

/// Alpha sweep over ingested scores: no training, just the mixed scoring
/// rule over whichever channels the file provides. The human/model channel
/// is s_m when present, s_h otherwise.
inline SweepResult run_ingested_alpha_sweep(const IngestedScores& scores,
                                            const std::vector<double>& grid,
                                            double lambda) {
  if (scores.pairs.empty()) throw EmptyEval("no ingested pairs");
  if (grid.empty()) throw ConfigError("empty alpha grid");
  SweepResult res;
  res.experiment = "alpha_sweep";
  res.config_digest = scores.source_digest;
  const bool have_truth =
      std::all_of(scores.pairs.begin(), scores.pairs.end(),
                  [](const auto& p) { return p.truth.has_value(); });
  res.metric_names = {"accuracy_vs_label"};
  if (have_truth) res.metric_names.push_back("accuracy_vs_truth");

  for (double alpha : grid) {
    SweepCell cell;
    cell.param = alpha;
    cell.seed = 0;
    double vs_label = 0.0, vs_truth = 0.0;
    for (const auto& p : scores.pairs) {
      auto model_side = [&](bool a) -> std::optional<double> {
        if (p.s_m_a && p.s_m_b) return a ? p.s_m_a : p.s_m_b;
        if (p.s_h_a && p.s_h_b) return a ? p.s_h_a : p.s_h_b;
        return std::nullopt;
      };
      auto aux_side = [&](bool a) -> std::optional<double> {
        if (p.s_a_a && p.s_a_b) return a ? p.s_a_a : p.s_a_b;
        return std::nullopt;
      };
      auto mixed = [&](bool a) {
        const auto sm = model_side(a);
        const auto sa = aux_side(a);
        if (alpha > 0.0 && !sm) {
          throw MissingSignal("pair " + p.pair_id + " lacks a human/model score");
        }
        if (alpha < 1.0 && !sa) {
          throw MissingSignal("pair " + p.pair_id + " lacks an auxiliary score");
        }
        double v = 0.0;
        if (alpha > 0.0) v += alpha * *sm;
        if (alpha < 1.0) v += (1.0 - alpha) * lambda * *sa;
        return v;
      };
      const double da = mixed(true) - mixed(false);
      auto credit = [&](sup::Side ref) {
        if (da == 0.0) return 0.5;
        return (da > 0.0 ? sup::Side::A : sup::Side::B) == ref ? 1.0 : 0.0;
      };
      vs_label += credit(p.label);
      if (have_truth) vs_truth += credit(*p.truth);
    }
    const double dn = static_cast<double>(scores.pairs.size());
    cell.metrics["accuracy_vs_label"] = vs_label / dn;
    if (have_truth) cell.metrics["accuracy_vs_truth"] = vs_truth / dn;
    res.cells.push_back(std::move(cell));
  }
  res.aggregates = summarize(res.cells);
  return res;
}

/// Runs the experiment named in the config; normalization reports are
/// produced by run_normalization_degeneracy directly.
inline SweepResult run_experiment(const ExperimentConfig& cfg, int parallel = 1) {
  switch (cfg.experiment) {
    case ExperimentKind::alpha_sweep: {
      if (!cfg.task.ingest_path.empty()) {
        auto scores = ingest_scores(cfg.task.ingest_path, /*strict=*/true);
        return run_ingested_alpha_sweep(scores, cfg.grid, cfg.lambda);
      }
      return run_alpha_sweep(cfg, parallel);
    }
    case ExperimentKind::lambda_ablation: return run_lambda_ablation(cfg, parallel);
    case ExperimentKind::noise_sweep: return run_noise_sweep(cfg, parallel);
    case ExperimentKind::scaling_sweep: return run_scaling_sweep(cfg, parallel);
    case ExperimentKind::sufficiency_proxy: return run_sufficiency_proxy(cfg, parallel);
    case ExperimentKind::normalization_degeneracy:
      throw ConfigError("normalization_degeneracy produces a report, not a sweep");
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace hbi::sweep
