#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hbi/digest.hpp"
#include "hbi/errors.hpp"
#include "hbi/prob.hpp"

namespace hbi::info {

inline constexpr double kLn2 = 0.6931471805599453;

/// -sum p log2 p with 0 log 0 = 0.
inline double entropy_bits(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

inline double entropy(const prob::Distribution& d) {
  d.validate();
  return entropy_bits(d.probs);
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace detail {

inline double clamp_information(double bits) {
  if (bits < 0.0 && bits > -1e-12) return 0.0;
  return bits;
}

}  // namespace detail

/// I(A;B) = H(A) + H(B) - H(A,B), clamped against floating-point
/// cancellation below zero.
inline double mutual_information(const prob::JointDistribution& j,
                                 std::size_t axis_a, std::size_t axis_b) {
  if (axis_a >= j.rank() || axis_b >= j.rank() || axis_a == axis_b) {
    throw AxisError("mutual_information: bad axis pair");
  }
  const auto ab = j.rank() == 2 && axis_a == 0 && axis_b == 1
                      ? j
                      : j.marginal({axis_a, axis_b});
  const double h_ab = entropy_bits(ab.table());
  const double h_a = entropy_bits(ab.marginal({0}).table());
  const double h_b = entropy_bits(ab.marginal({1}).table());
  double mi = h_a + h_b - h_ab;
  mi = detail::clamp_information(mi);
  if (mi < 0.0) mi = 0.0;  // MI is nonnegative; residual is fp noise
  return mi;
}

inline double mutual_information(const prob::JointDistribution& j,
                                 std::string_view a, std::string_view b) {
  return mutual_information(j, j.axis_index(a), j.axis_index(b));
}

/// I(A;B|C) = sum_c p(c) I(A;B | C=c) over one or more conditioning axes.
inline double conditional_mi(const prob::JointDistribution& j, std::size_t axis_a,
                             std::size_t axis_b,
                             const std::vector<std::size_t>& cond) {
  if (cond.empty()) return mutual_information(j, axis_a, axis_b);
  std::vector<std::size_t> keep{axis_a, axis_b};
  keep.insert(keep.end(), cond.begin(), cond.end());
  auto m = cond.size() == 1
               ? j.marginal(keep)
               : [&] {
                   auto full = j.marginal(keep);
                   std::vector<std::size_t> group;
                   for (std::size_t i = 2; i < keep.size(); ++i) group.push_back(i);
                   return full.merge_axes(group, "_cond");
                 }();
  // m has axes (A, B, C) with C possibly a tuple axis.
  const std::size_t na = m.dim(0), nb = m.dim(1), nc = m.dim(2);
  const auto& t = m.table();
  double total = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    double pc = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) pc += t[(a * nb + b) * nc + c];
    }
    if (pc <= 0.0) continue;
    double h_a = 0.0, h_b = 0.0, h_ab = 0.0;
    std::vector<double> pa(na, 0.0), pb(nb, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) {
        const double p = t[(a * nb + b) * nc + c] / pc;
        if (p > 0.0) {
          h_ab -= p * std::log2(p);
          pa[a] += p;
          pb[b] += p;
        }
      }
    }
    h_a = entropy_bits(pa);
    h_b = entropy_bits(pb);
    double mi = h_a + h_b - h_ab;
    mi = detail::clamp_information(mi);
    if (mi < 0.0) mi = 0.0;
    total += pc * mi;
  }
  return detail::clamp_information(total);
}

inline double conditional_mi(const prob::JointDistribution& j, std::string_view a,
                             std::string_view b,
                             const std::vector<std::string>& cond_names) {
  std::vector<std::size_t> cond;
  for (const auto& n : cond_names) cond.push_back(j.axis_index(n));
  return conditional_mi(j, j.axis_index(a), j.axis_index(b), cond);
}

/// Chain-rule split of the information carried jointly by the three
/// supervision signals about the target (axis order: target, human, model,
/// auxiliary).
struct MIDecomposition {
  double i_h = 0.0;          ///< I(Y*; S_H)
  double i_m_given_h = 0.0;  ///< I(Y*; S_M | S_H)
  double i_a_given_hm = 0.0; ///< I(Y*; S_A | S_H, S_M)
  double c_mix = 0.0;        ///< sum of the three terms
};

inline MIDecomposition chain_rule_decomposition(const prob::JointDistribution& j) {
  if (j.rank() != 4) {
    throw AxisError("chain_rule_decomposition expects axes (target, h, m, a)");
  }
  MIDecomposition d;
  d.i_h = mutual_information(j, std::size_t{0}, std::size_t{1});
  d.i_m_given_h = conditional_mi(j, 0, 2, {1});
  d.i_a_given_hm = conditional_mi(j, 0, 3, {1, 2});
  d.c_mix = d.i_h + d.i_m_given_h + d.i_a_given_hm;
  return d;
}

/// Direct I(target; (h,m,a)) via the lossless tuple combiner; equals
/// MIDecomposition::c_mix up to fp tolerance.
inline double joint_signal_information(const prob::JointDistribution& j) {
  if (j.rank() != 4) {
    throw AxisError("joint_signal_information expects axes (target, h, m, a)");
  }
  auto merged = j.merge_axes({1, 2, 3}, "_signals");
  return mutual_information(merged, std::size_t{0}, std::size_t{1});
}

struct CapacityResult {
  double capacity_bits = 0.0;
  prob::Distribution optimal_input;
  long iterations = 0;
  double gap = 0.0;  ///< final bracket width in bits
};

/// Blahut-Arimoto channel capacity with the classic per-iteration bracket
/// I_L <= C <= I_U; stops when the bracket width is <= tol bits and returns
/// the midpoint.
inline CapacityResult channel_capacity_ba(const prob::Channel& ch, double tol = 1e-9,
                                          long max_iter = 100000) {
  ch.validate();
  if (!(tol > 0.0)) throw ConfigError("capacity tolerance must be > 0");
  const std::size_t n = ch.n_inputs(), m = ch.n_outputs();
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> q(m, 0.0), dkl(n, 0.0);

  double lo = 0.0, hi = 0.0;
  for (long iter = 1; iter <= max_iter; ++iter) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < m; ++y) q[y] += p[x] * ch.rows[x][y];
    }
    for (std::size_t x = 0; x < n; ++x) {
      double d = 0.0;
      for (std::size_t y = 0; y < m; ++y) {
        const double w = ch.rows[x][y];
        if (w > 0.0 && q[y] > 0.0) d += w * std::log(w / q[y]);
      }
      dkl[x] = d;
    }
    double i_lower = 0.0, i_upper = dkl[0];
    for (std::size_t x = 0; x < n; ++x) {
      i_lower += p[x] * dkl[x];
      i_upper = std::max(i_upper, dkl[x]);
    }
    lo = std::max(0.0, i_lower) / kLn2;
    hi = std::max(0.0, i_upper) / kLn2;
    if (hi - lo <= tol) {
      CapacityResult res;
      res.capacity_bits = 0.5 * (lo + hi);
      res.optimal_input = prob::Distribution{ch.input_support, p};
      res.iterations = iter;
      res.gap = hi - lo;
      return res;
    }
    double z = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      p[x] *= std::exp(dkl[x] - i_upper);  // shift for overflow safety
      z += p[x];
    }
    for (std::size_t x = 0; x < n; ++x) p[x] /= z;
  }
  throw NonConvergence("channel_capacity_ba: bracket did not close", lo, hi,
                       max_iter);
}

struct RDPoint {
  double distortion = 0.0;
  double rate_bits = 0.0;
  double slope_bits = 0.0;  ///< Lagrange slope dR/dD (bits per distortion unit)
};

/// Rate-distortion curve traced by a Lagrange-slope sweep, plus the two
/// distortion endpoints: d_star (unbounded rate) and d_max (zero rate).
struct RateDistortionCurve {
  std::vector<RDPoint> points;  ///< sorted by increasing distortion
  prob::Distribution source;
  std::string distortion_name;
  std::vector<std::vector<double>> distortion;  ///< d(y, yhat), kept for refinement
  double d_star = 0.0;
  double d_max = 0.0;

  double max_rate() const {
    double r = 0.0;
    for (const auto& pt : points) r = std::max(r, pt.rate_bits);
    return r;
  }
};

namespace detail {

/// One Blahut fixed point at inverse-temperature beta (nats per distortion
/// unit). Returns (distortion, rate_bits).
inline std::pair<double, double> rd_point_at_beta(
    const std::vector<double>& p, const std::vector<std::vector<double>>& d,
    double beta) {
  const std::size_t n = p.size(), m = d[0].size();
  std::vector<double> q(m, 1.0 / static_cast<double>(m));
  std::vector<std::vector<double>> a(n, std::vector<double>(m));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < m; ++y) a[x][y] = std::exp(-beta * d[x][y]);
  }
  std::vector<double> qn(m);
  std::vector<std::vector<double>> cond(n, std::vector<double>(m));
  const long max_iter = 1000000;
  for (long iter = 0; iter < max_iter; ++iter) {
    std::fill(qn.begin(), qn.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      double z = 0.0;
      for (std::size_t y = 0; y < m; ++y) z += q[y] * a[x][y];
      for (std::size_t y = 0; y < m; ++y) {
        cond[x][y] = z > 0.0 ? q[y] * a[x][y] / z : 0.0;
        qn[y] += p[x] * cond[x][y];
      }
    }
    double delta = 0.0;
    for (std::size_t y = 0; y < m; ++y) delta = std::max(delta, std::abs(qn[y] - q[y]));
    q = qn;
    if (delta < 1e-13) break;
  }
  // Final conditional from the converged reproduction marginal.
  double dist = 0.0, rate_nats = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    double z = 0.0;
    for (std::size_t y = 0; y < m; ++y) z += q[y] * a[x][y];
    for (std::size_t y = 0; y < m; ++y) {
      const double c = z > 0.0 ? q[y] * a[x][y] / z : 0.0;
      if (c > 0.0) {
        dist += p[x] * c * d[x][y];
        rate_nats += p[x] * c * std::log(c / q[y]);
      }
    }
  }
  return {dist, std::max(0.0, rate_nats) / kLn2};
}

}  // namespace detail

/// Geometric slope ladder covering the near-zero-rate and near-d_star ends.
inline std::vector<double> auto_slopes(std::size_t count = 48, double shallow = -0.02,
                                       double steep = -40.0) {
  std::vector<double> slopes;
  const double lo = std::log(-shallow), hi = std::log(-steep);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    slopes.push_back(-std::exp(lo + t * (hi - lo)));
  }
  std::sort(slopes.begin(), slopes.end());
  return slopes;
}

/// Traces R(D) for a discrete source by alternating minimization, one point
/// per Lagrange slope (slopes in bits per distortion unit, strictly negative).
inline RateDistortionCurve rate_distortion_ba(
    const prob::Distribution& source, const std::vector<std::vector<double>>& dist,
    std::vector<double> slopes, std::string distortion_name = "custom") {
  source.validate();
  if (dist.size() != source.size()) {
    throw ShapeError("distortion matrix rows != source support");
  }
  const std::size_t m = dist[0].size();
  for (const auto& row : dist) {
    if (row.size() != m) throw ShapeError("ragged distortion matrix");
    for (double v : row) {
      if (!(v >= 0.0)) throw InvalidDistortion("negative distortion entry");
    }
  }
  if (slopes.empty()) throw ConfigError("empty slope list");
  std::sort(slopes.begin(), slopes.end());
  for (double s : slopes) {
    if (!(s < 0.0)) throw ConfigError("slopes must be strictly negative");
  }

  RateDistortionCurve curve;
  curve.source = source;
  curve.distortion_name = std::move(distortion_name);
  curve.distortion = dist;

  // Unbounded-rate distortion: best reproduction per source symbol.
  curve.d_star = 0.0;
  for (std::size_t x = 0; x < source.size(); ++x) {
    double best = dist[x][0];
    for (std::size_t y = 1; y < m; ++y) best = std::min(best, dist[x][y]);
    curve.d_star += source.probs[x] * best;
  }
  // Zero-rate distortion: best constant reproduction.
  curve.d_max = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < m; ++y) {
    double v = 0.0;
    for (std::size_t x = 0; x < source.size(); ++x) v += source.probs[x] * dist[x][y];
    curve.d_max = std::min(curve.d_max, v);
  }

  for (double s : slopes) {
    const double beta = -s * kLn2;  // bits/distortion -> nats/distortion
    auto [d, r] = detail::rd_point_at_beta(source.probs, dist, beta);
    curve.points.push_back(RDPoint{d, r, s});
  }
  curve.points.push_back(RDPoint{curve.d_max, 0.0, 0.0});

  std::sort(curve.points.begin(), curve.points.end(),
            [](const RDPoint& a, const RDPoint& b) { return a.distortion < b.distortion; });
  // Collapse numerically coincident distortions, keeping the lower rate.
  std::vector<RDPoint> dedup;
  for (const auto& pt : curve.points) {
    if (!dedup.empty() && std::abs(pt.distortion - dedup.back().distortion) < 1e-12) {
      if (pt.rate_bits < dedup.back().rate_bits) dedup.back() = pt;
    } else {
      dedup.push_back(pt);
    }
  }
  curve.points = std::move(dedup);

  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].rate_bits > curve.points[i - 1].rate_bits + 1e-6) {
      throw NonConvergence("rate_distortion_ba: non-monotone rates",
                           curve.points[i - 1].rate_bits, curve.points[i].rate_bits,
                           static_cast<long>(i));
    }
  }
  return curve;
}

enum class InversionStatus {
  interior,              ///< c fell strictly inside the traced curve
  capacity_not_binding,  ///< c at or above the max traced rate; returns d_star
  zero_rate              ///< c <= 0; returns d_max
};

struct InversionResult {
  double distortion = 0.0;
  double error_bound = 0.0;  ///< half-width of the bracketing distortion segment
  InversionStatus status = InversionStatus::interior;
};

/// Monotone piecewise-linear inverse of the traced curve at rate c_bits.
/// R(D) is convex and decreasing, so chord interpolation never undershoots
/// the true inverse; the reported bound is the bracketing segment half-width.
/// With refine=true the bracketing slopes are re-solved (bisected) until the
/// bound drops below refine_bound.
inline InversionResult invert_rate_distortion(const RateDistortionCurve& curve,
                                              double c_bits, bool refine = false,
                                              double refine_bound = 1e-3) {
  if (curve.points.size() < 2) {
    throw ShapeError("invert_rate_distortion: need at least two curve points");
  }
  if (c_bits <= 0.0) {
    return InversionResult{curve.d_max, 0.0, InversionStatus::zero_rate};
  }
  if (c_bits >= curve.max_rate()) {
    return InversionResult{curve.d_star, 0.0, InversionStatus::capacity_not_binding};
  }
  // Points sorted by increasing D means decreasing R. Find the bracket.
  std::vector<RDPoint> pts = curve.points;
  for (int round = 0;; ++round) {
    std::size_t hi = 0;  // pts[hi].rate >= c >= pts[hi+1].rate
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (pts[i].rate_bits >= c_bits && c_bits >= pts[i + 1].rate_bits) {
        hi = i;
        break;
      }
    }
    const RDPoint& a = pts[hi];
    const RDPoint& b = pts[hi + 1];
    const double bound = 0.5 * (b.distortion - a.distortion);
    if (!refine || bound <= refine_bound || round >= 24 ||
        curve.distortion.empty()) {
      double t = 0.0;
      if (a.rate_bits > b.rate_bits) {
        t = (a.rate_bits - c_bits) / (a.rate_bits - b.rate_bits);
      }
      const double d = a.distortion + t * (b.distortion - a.distortion);
      return InversionResult{d, bound, InversionStatus::interior};
    }
    // Bisect in slope space; slope 0 marks the synthetic zero-rate endpoint.
    const double sa = a.slope_bits < 0.0 ? a.slope_bits : -1e-4;
    const double sb = b.slope_bits < 0.0 ? b.slope_bits : -1e-4;
    const double mid = -std::sqrt(sa * sb);
    const double beta = -mid * kLn2;
    auto [d_new, r_new] =
        detail::rd_point_at_beta(curve.source.probs, curve.distortion, beta);
    pts.push_back(RDPoint{d_new, r_new, mid});
    std::sort(pts.begin(), pts.end(), [](const RDPoint& x, const RDPoint& y) {
      return x.distortion < y.distortion;
    });
  }
}

/// Certified lower bound on excess risk produced by one of the framework
/// witnesses; kind names which argument produced it.
struct FloorCertificate {
  std::string kind;  ///< info | operator | pacbayes | causal | categorical | rlhf-gap | hbi-gamma
  double value = 0.0;
  std::optional<std::array<double, 3>> components;      ///< (noise, pref, sem)
  std::optional<std::array<double, 3>> raw_components;  ///< before rescaling
  std::string inputs_digest;

  void validate() const {
    if (!(value >= 0.0)) throw ConfigError("certificate value must be >= 0");
    if (components) {
      const double s = (*components)[0] + (*components)[1] + (*components)[2];
      if (std::abs(s - value) > 1e-9) {
        throw ConfigError("certificate components do not sum to value");
      }
    }
  }
};

namespace detail {

inline std::string digest_source_channel(const prob::Distribution& src,
                                         const prob::Channel& ch,
                                         const std::vector<std::vector<double>>& dist,
                                         double c_link) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& s : src.support) os << s << ';';
  for (double p : src.probs) os << p << ';';
  for (const auto& row : ch.rows) {
    for (double v : row) os << v << ';';
  }
  for (const auto& row : dist) {
    for (double v : row) os << v << ';';
  }
  os << c_link;
  return digest_of(os.str());
}

}  // namespace detail

/// Distortion-floor certificate: capacity of the supervision channel under
/// the given source, inverted through R(D), scaled by the distortion-risk
/// link constant. value = c_link * max(0, D_H - D*).
inline FloorCertificate info_floor_certificate(
    const prob::Distribution& source, const prob::Channel& ch,
    const std::vector<std::vector<double>>& dist, double c_link) {
  if (!(c_link > 0.0)) throw ConfigError("c_link must be positive");
  auto joint = prob::joint_from_chain(source, {ch}, prob::ChainStructure::chain,
                                      {"y", "s"});
  const double c_eff = mutual_information(joint, std::size_t{0}, std::size_t{1});
  auto curve = rate_distortion_ba(source, dist, auto_slopes());
  auto inv = invert_rate_distortion(curve, c_eff, /*refine=*/true);
  FloorCertificate cert;
  cert.kind = "info";
  cert.value = c_link * std::max(0.0, inv.distortion - curve.d_star);
  cert.inputs_digest = detail::digest_source_channel(source, ch, dist, c_link);
  cert.validate();
  return cert;
}

/// Data-processing slack I(Y*;S) - I(Y*;Theta) for a joint built over the
/// chain (target, signal, estimate); must be >= -1e-9.
inline double verify_dpi(const prob::JointDistribution& j) {
  if (j.rank() != 3) throw AxisError("verify_dpi expects axes (target, s, theta)");
  const double i_ys = mutual_information(j, std::size_t{0}, std::size_t{1});
  const double i_yt = mutual_information(j, std::size_t{0}, std::size_t{2});
  return i_ys - i_yt;
}

inline std::vector<std::vector<double>> hamming_distortion(std::size_t n) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  return d;
}

}  // namespace hbi::info
