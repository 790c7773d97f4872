#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hbi/errors.hpp"
#include "hbi/prob.hpp"
#include "hbi/rng.hpp"

namespace hbi::sup {

enum class NoiseKind { none, gaussian, flip };

/// Stochastic annotation noise: gaussian scale for real-valued signals, or a
/// symmetric flip rate for discrete labels.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double scale = 0.0;  ///< sigma for gaussian, flip rate for flip

  void validate() const {
    if (!(scale >= 0.0)) throw ConfigError("noise scale must be >= 0");
    if (kind == NoiseKind::flip && scale > 1.0) {
      throw ConfigError("flip rate must be <= 1");
    }
  }
};

enum class BiasKind { none, linear, table };

/// Systematic preference distortion b(x): a linear functional of the feature
/// vector, or a lookup table over input symbols.
struct BiasSpec {
  BiasKind kind = BiasKind::none;
  std::vector<double> delta;                ///< linear: b(x) = delta . x
  std::map<std::string, double> table;      ///< table: b(symbol)

  double eval(std::span<const double> x) const {
    switch (kind) {
      case BiasKind::none:
        return 0.0;
      case BiasKind::linear: {
        if (delta.size() != x.size()) {
          throw ShapeError("bias delta dimension != feature dimension");
        }
        double b = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) b += delta[i] * x[i];
        return b;
      }
      case BiasKind::table:
        throw ShapeError("table bias needs a symbol, not features");
    }
    return 0.0;
  }

  double eval(const std::string& symbol) const {
    if (kind == BiasKind::none) return 0.0;
    if (kind != BiasKind::table) {
      throw ShapeError("feature bias needs features, not a symbol");
    }
    auto it = table.find(symbol);
    return it == table.end() ? 0.0 : it->second;
  }

  bool is_constant_zero() const {
    if (kind == BiasKind::none) return true;
    if (kind == BiasKind::linear) {
      return std::all_of(delta.begin(), delta.end(), [](double v) { return v == 0.0; });
    }
    return std::all_of(table.begin(), table.end(),
                       [](const auto& kv) { return kv.second == 0.0; });
  }

  double norm() const {
    double s = 0.0;
    if (kind == BiasKind::linear) {
      for (double v : delta) s += v * v;
    }
    return std::sqrt(s);
  }
};

/// Semantic compression: ordered bin edges; each bin maps to its midpoint.
/// Empty edges mean the identity (no compression).
struct QuantizerSpec {
  std::vector<double> edges;

  bool identity() const { return edges.empty(); }

  void validate() const {
    if (edges.empty()) return;
    if (edges.size() < 2) throw ConfigError("quantizer needs >= 2 edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (!(edges[i] > edges[i - 1])) {
        throw ConfigError("quantizer edges must be strictly increasing");
      }
    }
  }

  std::size_t n_bins() const { return identity() ? 0 : edges.size() - 1; }

  /// Bin representative for y; out-of-range values clamp to the outer bins.
  double apply(double y, bool* clamped = nullptr) const {
    if (identity()) {
      if (clamped) *clamped = false;
      return y;
    }
    bool clip = false;
    std::size_t bin;
    if (y < edges.front()) {
      bin = 0;
      clip = true;
    } else if (y >= edges.back()) {
      bin = edges.size() - 2;
      clip = y > edges.back();
    } else {
      bin = 0;
      while (bin + 2 < edges.size() && y >= edges[bin + 1]) ++bin;
    }
    if (clamped) *clamped = clip;
    return 0.5 * (edges[bin] + edges[bin + 1]);
  }
};

/// Three-part decomposition of a human supervision channel: annotation noise,
/// preference bias, and semantic compression.
struct SupervisionSpec {
  NoiseSpec noise;
  BiasSpec bias;
  QuantizerSpec quantizer;

  void validate() const {
    noise.validate();
    quantizer.validate();
  }

  static SupervisionSpec identity() { return SupervisionSpec{}; }
};

struct DecomposedSignal {
  double value = 0.0;
  bool clamped = false;  ///< y fell outside the quantizer range
};

/// S = q(y*) + eps + b(x). With the identity quantizer, zero noise and zero
/// bias this returns y* unchanged.
inline DecomposedSignal apply_decomposition(double y_star,
                                            std::span<const double> x_features,
                                            const SupervisionSpec& spec,
                                            prob::RngStream& rng) {
  spec.validate();
  if (spec.noise.kind == NoiseKind::flip) {
    throw ConfigError("flip noise applies to discrete labels, not real signals");
  }
  DecomposedSignal out;
  out.value = spec.quantizer.apply(y_star, &out.clamped);
  if (spec.noise.kind == NoiseKind::gaussian && spec.noise.scale > 0.0) {
    out.value += spec.noise.scale * rng.next_gaussian();
  }
  out.value += spec.bias.eval(x_features);
  return out;
}

namespace detail {

inline double parse_symbol(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ShapeError("non-numeric support symbol: " + s);
  }
  if (pos != s.size()) throw ShapeError("non-numeric support symbol: " + s);
  return v;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

/// Discretized law of apply_decomposition as a channel over a numeric output
/// grid. Gaussian noise is integrated against the grid's midpoint cells;
/// the grid must cover at least 99.9% of the noise mass for every row.
/// x-dependent bias is not representable here; only constant (zero) bias
/// flows through this path.
inline prob::Channel build_human_channel(const SupervisionSpec& spec,
                                         const std::vector<std::string>& y_support,
                                         const std::vector<std::string>& s_grid) {
  spec.validate();
  if (!spec.bias.is_constant_zero()) {
    throw ConfigError("build_human_channel: x-dependent bias not representable");
  }
  prob::Channel ch{y_support, s_grid, {}};
  const std::size_t m = s_grid.size();

  if (spec.noise.kind == NoiseKind::flip) {
    if (s_grid != y_support) {
      throw ShapeError("flip noise requires s_grid == y_support");
    }
    const double r = spec.noise.scale;
    const std::size_t n = y_support.size();
    if (n < 2) throw ShapeError("flip noise needs >= 2 symbols");
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(n, r / static_cast<double>(n - 1));
      row[i] = 1.0 - r;
      ch.rows.push_back(std::move(row));
    }
    ch.validate();
    return ch;
  }

  std::vector<double> grid(m);
  for (std::size_t j = 0; j < m; ++j) grid[j] = detail::parse_symbol(s_grid[j]);
  for (std::size_t j = 1; j < m; ++j) {
    if (!(grid[j] > grid[j - 1])) {
      throw ShapeError("s_grid must be strictly increasing");
    }
  }

  const double sigma =
      spec.noise.kind == NoiseKind::gaussian ? spec.noise.scale : 0.0;
  for (const auto& ysym : y_support) {
    const double y = detail::parse_symbol(ysym);
    const double v = spec.quantizer.apply(y);
    std::vector<double> row(m, 0.0);
    if (sigma <= 0.0) {
      // Point mass on the nearest grid value.
      std::size_t best = 0;
      double best_gap = std::abs(grid[0] - v);
      for (std::size_t j = 1; j < m; ++j) {
        const double gap = std::abs(grid[j] - v);
        if (gap < best_gap) {
          best = j;
          best_gap = gap;
        }
      }
      row[best] = 1.0;
    } else {
      const double covered = detail::normal_cdf((grid[m - 1] - v) / sigma) -
                             detail::normal_cdf((grid[0] - v) / sigma);
      if (covered < 0.999) {
        throw GridCoverageError("s_grid covers only " + std::to_string(covered) +
                                " of the noise mass for y=" + ysym);
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double lo = j == 0 ? -std::numeric_limits<double>::infinity()
                                 : 0.5 * (grid[j - 1] + grid[j]);
        const double hi = j + 1 == m ? std::numeric_limits<double>::infinity()
                                     : 0.5 * (grid[j] + grid[j + 1]);
        const double p_lo = std::isinf(lo) ? 0.0 : detail::normal_cdf((lo - v) / sigma);
        const double p_hi = std::isinf(hi) ? 1.0 : detail::normal_cdf((hi - v) / sigma);
        row[j] = std::max(0.0, p_hi - p_lo);
      }
      double mass = 0.0;
      for (double p : row) mass += p;
      for (double& p : row) p /= mass;
    }
    ch.rows.push_back(std::move(row));
  }
  ch.validate();
  return ch;
}

enum class Side { A, B };

inline Side other(Side s) { return s == Side::A ? Side::B : Side::A; }

/// One held-out comparison: per-candidate features, per-channel scores where
/// available, the channel's preference and (optionally) the latent truth.
struct PreferencePair {
  std::string pair_id;
  std::vector<double> features_a;
  std::vector<double> features_b;
  std::optional<double> s_h_a, s_h_b;
  std::optional<double> s_m_a, s_m_b;
  std::optional<double> s_a_a, s_a_b;
  Side label = Side::A;
  std::optional<Side> truth;
};

struct CorruptionSpec {
  double flip_rate = 0.0;  ///< gamma in [0, 0.5]

  void validate() const {
    if (!(flip_rate >= 0.0 && flip_rate <= 0.5)) {
      throw ConfigError("flip_rate must be in [0, 0.5]");
    }
  }
};

/// Independently swaps each label A<->B with probability gamma. Features,
/// scores and truth are never touched; the input list is not mutated.
inline std::vector<PreferencePair> corrupt_labels(
    const std::vector<PreferencePair>& pairs, const CorruptionSpec& spec,
    prob::RngStream& rng) {
  spec.validate();
  std::vector<PreferencePair> out = pairs;
  for (auto& p : out) {
    if (rng.next_bernoulli(spec.flip_rate)) p.label = other(p.label);
  }
  return out;
}

/// Mixing weights for hybrid supervision; alpha + beta + gamma_mix = 1.
/// lambda rescales the auxiliary channel.
struct HybridWeights {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma_mix = 0.0;
  double lambda = 1.0;

  void validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(alpha) || !in01(beta) || !in01(gamma_mix)) {
      throw ConfigError("mixing weights must lie in [0,1]");
    }
    if (std::abs(alpha + beta + gamma_mix - 1.0) > 1e-12) {
      throw ConfigError("mixing weights must sum to 1");
    }
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  }

  static HybridWeights two_channel(double alpha, double lambda = 1.0) {
    return HybridWeights{alpha, 0.0, 1.0 - alpha, lambda};
  }
};

/// Two-channel hybrid score alpha*s_m + (1-alpha)*lambda*s_a (beta = 0
/// convention: the auxiliary weight is 1 - alpha).
inline double hybrid_score(const HybridWeights& w, double s_m, double s_a) {
  w.validate();
  if (w.beta != 0.0) {
    throw ConfigError("hybrid_score uses the beta=0 two-channel convention");
  }
  return w.alpha * s_m + (1.0 - w.alpha) * w.lambda * s_a;
}

/// Hybrid of a real human score with a binary correctness indicator.
inline double hybrid_score_binary(double alpha, double s_h, double s_a) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  if (s_a != 0.0 && s_a != 1.0) throw ConfigError("s_a must be 0 or 1");
  return alpha * s_h + (1.0 - alpha) * s_a;
}

struct ZScoreResult {
  std::vector<double> values;
  bool degenerate = false;  ///< batch std fell below 1e-12; values forced to 0
};

/// Batch z-score with the population standard deviation. Zero-variance
/// batches map to all-zeros with the degeneracy flag set.
inline ZScoreResult zscore_normalize(const std::vector<double>& scores) {
  if (scores.size() < 2) throw BatchTooSmall("z-score batch needs >= 2 scores");
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());
  const double sd = std::sqrt(var);
  ZScoreResult out;
  out.values.resize(scores.size());
  if (sd < 1e-12) {
    out.degenerate = true;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.values[i] = (scores[i] - mean) / sd;
  }
  return out;
}

enum class CombineRule { weighted_sum, concatenation, product_channel };

/// Weighted three-channel combination; every nonzero weight must come with a
/// present signal.
inline double combine_weighted(const HybridWeights& w, std::optional<double> s_h,
                               std::optional<double> s_m,
                               std::optional<double> s_a) {
  w.validate();
  auto need = [](double weight, const std::optional<double>& s, const char* name) {
    if (weight > 0.0 && !s.has_value()) {
      throw MissingSignal(std::string("missing signal with nonzero weight: ") + name);
    }
  };
  need(w.alpha, s_h, "s_h");
  need(w.beta, s_m, "s_m");
  need(w.gamma_mix, s_a, "s_a");
  double v = 0.0;
  if (w.alpha > 0.0) v += w.alpha * *s_h;
  if (w.beta > 0.0) v += w.beta * *s_m;
  if (w.gamma_mix > 0.0) v += w.gamma_mix * *s_a;
  return v;
}

/// Lossless combiner over the symbolic signals carrying nonzero mixing
/// weight; a single active channel passes through unchanged, several become
/// the tuple symbol.
inline std::string combine_symbolic(const HybridWeights& w,
                                    const std::optional<std::string>& s_h,
                                    const std::optional<std::string>& s_m,
                                    const std::optional<std::string>& s_a) {
  w.validate();
  std::vector<std::string> active;
  auto take = [&](double weight, const std::optional<std::string>& s,
                  const char* name) {
    if (weight <= 0.0) return;
    if (!s) {
      throw MissingSignal(std::string("missing signal with nonzero weight: ") + name);
    }
    active.push_back(*s);
  };
  take(w.alpha, s_h, "s_h");
  take(w.beta, s_m, "s_m");
  take(w.gamma_mix, s_a, "s_a");
  if (active.size() == 1) return active.front();
  std::string out = "(";
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (i) out += "|";
    out += active[i];
  }
  out += ")";
  return out;
}

/// Lossless tuple combiner for symbolic signals.
inline std::string concatenate_symbols(const std::vector<std::string>& symbols) {
  if (symbols.empty()) throw MissingSignal("no symbols to concatenate");
  std::string out = "(";
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out += "|";
    out += symbols[i];
  }
  out += ")";
  return out;
}

/// Joint-output channel for two branches read from the same input. This is
/// the representation for correlated branches of a fan-out.
inline prob::Channel product_channel(const prob::Channel& first,
                                     const prob::Channel& second) {
  first.validate();
  second.validate();
  if (first.input_support != second.input_support) {
    throw ShapeError("product_channel: input supports differ");
  }
  prob::Channel out;
  out.input_support = first.input_support;
  for (const auto& a : first.output_support) {
    for (const auto& b : second.output_support) {
      out.output_support.push_back(concatenate_symbols({a, b}));
    }
  }
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    std::vector<double> row;
    row.reserve(out.output_support.size());
    for (double pa : first.rows[i]) {
      for (double pb : second.rows[i]) row.push_back(pa * pb);
    }
    out.rows.push_back(std::move(row));
  }
  out.validate();
  return out;
}

}  // namespace hbi::sup
