#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hbi/errors.hpp"
#include "hbi/infotheory.hpp"
#include "hbi/learners.hpp"
#include "hbi/prob.hpp"
#include "hbi/supervision.hpp"
#include "hbi/sweep.hpp"
#include "hbi/witness.hpp"

namespace hbi::io {

using nlohmann::json;

/// Reported metrics round to six decimals for stable golden files;
/// probability objects keep full precision so mass invariants survive a
/// round trip.
inline double round6(double v) {
  if (!std::isfinite(v)) return v;
  return std::round(v * 1e6) / 1e6;
}

inline std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf);
}

/// Writes content to a temp file in the destination directory and renames it
/// into place, so readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = dir / (path.filename().string() + ".tmp" +
                              std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("rename failed: " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Probability objects: full precision, stable field names.
// ---------------------------------------------------------------------------

inline json to_json(const prob::Distribution& d) {
  return json{{"support", d.support}, {"probs", d.probs}};
}

inline prob::Distribution distribution_from_json(const json& j) {
  if (!j.contains("support") || !j.contains("probs")) {
    throw ConfigError("distribution JSON needs support and probs");
  }
  prob::Distribution d;
  for (const auto& s : j["support"]) {
    d.support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  }
  d.probs = j["probs"].get<std::vector<double>>();
  d.validate();
  return d;
}

inline json to_json(const prob::Channel& ch) {
  return json{{"input_support", ch.input_support},
              {"output_support", ch.output_support},
              {"rows", ch.rows}};
}

inline prob::Channel channel_from_json(const json& j) {
  if (!j.contains("input_support") || !j.contains("output_support") ||
      !j.contains("rows")) {
    throw ConfigError("channel JSON needs input_support, output_support, rows");
  }
  prob::Channel ch;
  for (const auto& s : j["input_support"]) {
    ch.input_support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  }
  for (const auto& s : j["output_support"]) {
    ch.output_support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  }
  ch.rows = j["rows"].get<std::vector<std::vector<double>>>();
  ch.validate();
  return ch;
}

inline json to_json(const prob::JointDistribution& jd) {
  json axes = json::array();
  for (const auto& a : jd.axes()) {
    axes.push_back(json{{"name", a.name}, {"support", a.support}});
  }
  return json{{"axes", axes}, {"table", jd.table()}};
}

inline prob::JointDistribution joint_from_json(const json& j) {
  if (!j.contains("axes") || !j.contains("table")) {
    throw ConfigError("joint JSON needs axes and table");
  }
  std::vector<prob::Axis> axes;
  for (const auto& a : j["axes"]) {
    prob::Axis axis;
    axis.name = a.at("name").get<std::string>();
    for (const auto& s : a.at("support")) {
      axis.support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    }
    axes.push_back(std::move(axis));
  }
  return prob::JointDistribution(std::move(axes),
                                 j["table"].get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// Supervision spec.
// ---------------------------------------------------------------------------

inline json to_json(const sup::SupervisionSpec& spec) {
  json noise;
  switch (spec.noise.kind) {
    case sup::NoiseKind::none: noise = json{{"kind", "none"}}; break;
    case sup::NoiseKind::gaussian:
      noise = json{{"kind", "gaussian"}, {"scale", spec.noise.scale}};
      break;
    case sup::NoiseKind::flip:
      noise = json{{"kind", "flip"}, {"rate", spec.noise.scale}};
      break;
  }
  json bias;
  switch (spec.bias.kind) {
    case sup::BiasKind::none: bias = json{{"kind", "none"}}; break;
    case sup::BiasKind::linear:
      bias = json{{"kind", "linear"}, {"delta", spec.bias.delta}};
      break;
    case sup::BiasKind::table:
      bias = json{{"kind", "table"}, {"table", spec.bias.table}};
      break;
  }
  return json{{"noise", noise},
              {"bias", bias},
              {"quantizer", json{{"edges", spec.quantizer.edges}}}};
}

inline sup::SupervisionSpec supervision_from_json(const json& j) {
  sup::SupervisionSpec spec;
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    const std::string kind = n.value("kind", "none");
    if (kind == "gaussian") {
      spec.noise = {sup::NoiseKind::gaussian, n.value("scale", 0.0)};
    } else if (kind == "flip") {
      spec.noise = {sup::NoiseKind::flip, n.value("rate", 0.0)};
    } else if (kind == "none") {
      spec.noise = {sup::NoiseKind::none, 0.0};
    } else {
      throw ConfigError("unknown noise kind: " + kind);
    }
  }
  if (j.contains("bias")) {
    const auto& b = j["bias"];
    const std::string kind = b.value("kind", "none");
    if (kind == "linear") {
      spec.bias.kind = sup::BiasKind::linear;
      spec.bias.delta = b.value("delta", std::vector<double>{});
    } else if (kind == "table") {
      spec.bias.kind = sup::BiasKind::table;
      spec.bias.table = b.value("table", std::map<std::string, double>{});
    } else if (kind == "none") {
      spec.bias.kind = sup::BiasKind::none;
    } else {
      throw ConfigError("unknown bias kind: " + kind);
    }
  }
  if (j.contains("quantizer")) {
    spec.quantizer.edges = j["quantizer"].value("edges", std::vector<double>{});
  }
  spec.validate();
  return spec;
}

inline json to_json(const learn::LinearModel& m) {
  std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
  return json{{"weights", w}};
}

// ---------------------------------------------------------------------------
// Information-theory artifacts (reported values at six decimals).
// ---------------------------------------------------------------------------

inline json to_json(const info::RateDistortionCurve& curve) {
  json pts = json::array();
  for (const auto& p : curve.points) {
    pts.push_back(json{{"distortion", round6(p.distortion)},
                       {"rate_bits", round6(p.rate_bits)},
                       {"slope_bits", round6(p.slope_bits)}});
  }
  return json{{"points", pts},
              {"source", to_json(curve.source)},
              {"distortion_name", curve.distortion_name},
              {"d_star", round6(curve.d_star)},
              {"d_max", round6(curve.d_max)}};
}

inline json to_json(const info::FloorCertificate& cert) {
  json j{{"kind", cert.kind},
         {"value", round6(cert.value)},
         {"inputs_digest", cert.inputs_digest}};
  if (cert.components) {
    j["components"] = {round6((*cert.components)[0]), round6((*cert.components)[1]),
                       round6((*cert.components)[2])};
  }
  if (cert.raw_components) {
    j["raw_components"] = {round6((*cert.raw_components)[0]),
                           round6((*cert.raw_components)[1]),
                           round6((*cert.raw_components)[2])};
  }
  return j;
}

inline json to_json(const witness::WitnessReport& rep) {
  json trace = json::array();
  for (const auto& [x, y] : rep.trace) {
    trace.push_back(json::array({round6(x), round6(y)}));
  }
  return json{{"theorem_id", rep.theorem_id},
              {"lhs", round6(rep.lhs)},
              {"rhs", round6(rep.rhs)},
              {"satisfied", rep.satisfied},
              {"instance_digest", rep.instance_digest},
              {"flags", rep.flags},
              {"certificate", to_json(rep.certificate)},
              {"trace", trace}};
}

inline json to_json(const std::vector<witness::WitnessReport>& reps) {
  json arr = json::array();
  for (const auto& r : reps) arr.push_back(to_json(r));
  return arr;
}

// ---------------------------------------------------------------------------
// Experiment config.
// ---------------------------------------------------------------------------

inline sweep::ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.value("schema", 0) != 1) throw ConfigError("config schema must be 1");
  sweep::ExperimentConfig cfg =
      sweep::default_config(sweep::experiment_from_name(j.at("experiment")));
  if (j.contains("grid")) cfg.grid = j["grid"].get<std::vector<double>>();
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_test = j.value("n_test", cfg.n_test);
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.l2 = t.value("l2", cfg.train.l2);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.seed = t.value("seed", cfg.train.seed);
  }
  if (j.contains("task")) {
    const auto& t = j["task"];
    cfg.task.dim = t.value("dim", cfg.task.dim);
    if (t.contains("human")) cfg.task.human = supervision_from_json(t["human"]);
    if (t.contains("aux")) {
      const std::string kind = t["aux"].value("kind", "exact");
      if (kind == "exact") {
        cfg.task.aux = sweep::AuxKind::exact;
      } else if (kind == "noisy") {
        cfg.task.aux = sweep::AuxKind::noisy;
        cfg.task.aux_sigma = t["aux"].value("sigma", 0.0);
      } else if (kind == "indicator") {
        cfg.task.aux = sweep::AuxKind::indicator;
      } else {
        throw ConfigError("unknown aux kind: " + kind);
      }
    }
    cfg.task.e_h = t.value("e_h", cfg.task.e_h);
    cfg.task.margin_lo = t.value("margin_lo", cfg.task.margin_lo);
    cfg.task.margin_hi = t.value("margin_hi", cfg.task.margin_hi);
    cfg.task.degenerate_aux = t.value("degenerate_aux", cfg.task.degenerate_aux);
    cfg.task.ingest_path = t.value("ingest", cfg.task.ingest_path);
    if (cfg.task.human.bias.kind == sup::BiasKind::linear &&
        !cfg.task.human.bias.delta.empty() &&
        cfg.task.human.bias.delta.size() != cfg.task.dim) {
      throw ConfigError("bias delta dimension != task dim");
    }
  }
  cfg.validate();
  return cfg;
}

inline json to_json(const sweep::ExperimentConfig& cfg) {
  json task{{"dim", cfg.task.dim}, {"human", to_json(cfg.task.human)}};
  switch (cfg.task.aux) {
    case sweep::AuxKind::exact: task["aux"] = json{{"kind", "exact"}}; break;
    case sweep::AuxKind::noisy:
      task["aux"] = json{{"kind", "noisy"}, {"sigma", cfg.task.aux_sigma}};
      break;
    case sweep::AuxKind::indicator: task["aux"] = json{{"kind", "indicator"}}; break;
  }
  task["e_h"] = cfg.task.e_h;
  task["margin_lo"] = cfg.task.margin_lo;
  task["margin_hi"] = cfg.task.margin_hi;
  task["degenerate_aux"] = cfg.task.degenerate_aux;
  if (!cfg.task.ingest_path.empty()) task["ingest"] = cfg.task.ingest_path;
  return json{{"schema", cfg.schema},
              {"experiment", sweep::experiment_name(cfg.experiment)},
              {"task", task},
              {"grid", cfg.grid},
              {"alpha", cfg.alpha},
              {"lambda", cfg.lambda},
              {"n_train", cfg.n_train},
              {"n_test", cfg.n_test},
              {"seeds", cfg.seeds},
              {"train", json{{"learning_rate", cfg.train.learning_rate},
                             {"epochs", cfg.train.epochs},
                             {"l2", cfg.train.l2},
                             {"batch_size", cfg.train.batch_size},
                             {"seed", cfg.train.seed}}}};
}

// ---------------------------------------------------------------------------
// Sweep results: JSON, long CSV, and per-metric plot CSVs.
// ---------------------------------------------------------------------------

inline json to_json(const sweep::SweepResult& res) {
  json cells = json::array();
  for (const auto& c : res.cells) {
    json metrics;
    for (const auto& [k, v] : c.metrics) metrics[k] = round6(v);
    cells.push_back(json{{"param", round6(c.param)}, {"seed", c.seed},
                         {"metrics", metrics}});
  }
  json aggs = json::array();
  for (const auto& a : res.aggregates) {
    aggs.push_back(json{{"param", round6(a.param)},
                        {"metric", a.metric},
                        {"mean", round6(a.mean)},
                        {"ci_lo", round6(a.ci_lo)},
                        {"ci_hi", round6(a.ci_hi)},
                        {"single_seed", a.single_seed}});
  }
  json meta;
  for (const auto& [k, v] : res.meta) meta[k] = round6(v);
  return json{{"experiment", res.experiment},
              {"metrics", res.metric_names},
              {"cells", cells},
              {"aggregates", aggs},
              {"meta", meta},
              {"config_digest", res.config_digest}};
}

inline std::string results_csv(const sweep::SweepResult& res) {
  std::ostringstream os;
  os << "param,seed,metric,value\n";
  for (const auto& c : res.cells) {
    for (const auto& name : res.metric_names) {
      auto it = c.metrics.find(name);
      if (it == c.metrics.end()) continue;
      os << format6(c.param) << ',' << c.seed << ',' << name << ','
         << format6(it->second) << '\n';
    }
  }
  return os.str();
}

/// One plot-ready CSV per metric: header param,mean,ci_lo,ci_hi, rows in
/// param order, six decimals. Returns the written paths.
inline std::vector<std::filesystem::path> emit_plot_data(
    const sweep::SweepResult& res, const std::filesystem::path& out_dir) {
  if (res.cells.empty()) throw EmptyEval("no cells");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) {
    throw IoError("not a writable directory: " + out_dir.string());
  }
  std::vector<double> params;
  for (const auto& c : res.cells) {
    if (std::find(params.begin(), params.end(), c.param) == params.end()) {
      params.push_back(c.param);
    }
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& metric : res.metric_names) {
    std::ostringstream os;
    os << "param,mean,ci_lo,ci_hi\n";
    for (double p : params) {
      const auto& a = res.aggregate(p, metric);
      os << format6(a.param) << ',' << format6(a.mean) << ',' << format6(a.ci_lo)
         << ',' << format6(a.ci_hi) << '\n';
    }
    const auto path = out_dir / (metric + ".csv");
    atomic_write(path, os.str());
    paths.push_back(path);
  }
  return paths;
}

inline json to_json(const sweep::NormalizationReport& rep) {
  json audit = json::array();
  for (const auto& r : rep.audit) {
    audit.push_back(json{{"pair_id", r.pair_id},
                         {"s_h_true", round6(r.s_h_true)},
                         {"s_h_false", round6(r.s_h_false)},
                         {"s_a_true", round6(r.s_a_true)},
                         {"s_a_false", round6(r.s_a_false)},
                         {"z_h_gap", round6(r.z_h_gap)},
                         {"z_a_gap", round6(r.z_a_gap)},
                         {"hybrid_gap", round6(r.hybrid_gap)},
                         {"human_correct", r.human_correct},
                         {"hybrid_correct", r.hybrid_correct}});
  }
  auto rounded = [](const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(round6(x));
    return arr;
  };
  return json{{"acc_human_seeds", rounded(rep.acc_human_seeds)},
              {"acc_aux_seeds", rounded(rep.acc_aux_seeds)},
              {"acc_hybrid_seeds", rounded(rep.acc_hybrid_seeds)},
              {"acc_human_mean", round6(rep.acc_human_mean)},
              {"acc_aux_mean", round6(rep.acc_aux_mean)},
              {"acc_hybrid_mean", round6(rep.acc_hybrid_mean)},
              {"aux_degenerate", rep.aux_degenerate},
              {"hybrid_equals_human_fraction", round6(rep.hybrid_equals_human_fraction)},
              {"hybrid_equals_human_exact", rep.hybrid_equals_human_exact},
              {"config_digest", rep.config_digest},
              {"audit", audit}};
}

}  // namespace hbi::io
