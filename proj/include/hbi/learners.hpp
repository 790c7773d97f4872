#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hbi/errors.hpp"
#include "hbi/prob.hpp"
#include "hbi/supervision.hpp"

namespace hbi::learn {

struct LinearModel {
  Eigen::VectorXd weights;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }

  double score(std::span<const double> x) const {
    if (x.size() != dim()) throw ShapeError("feature dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights[static_cast<long>(i)] * x[i];
    return s;
  }
};

/// Closed-form ridge regression: (X'X/n + l2 I) w = X'y/n. With l2 = 0 a
/// rank-deficient system raises SingularSystem instead of returning one of
/// the many minimizers.
inline LinearModel fit_least_squares(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& targets, double l2) {
  const long n = features.rows(), d = features.cols();
  if (n != targets.size()) throw ShapeError("rows(features) != len(targets)");
  if (n == 0 || d == 0) throw ShapeError("empty design matrix");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd gram = features.transpose() * features * inv_n;
  Eigen::VectorXd rhs = features.transpose() * targets * inv_n;
  Eigen::MatrixXd sys = gram + l2 * Eigen::MatrixXd::Identity(d, d);

  if (l2 == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    lu.setThreshold(1e-10);
    if (lu.rank() < d) {
      throw SingularSystem("normal matrix is singular and l2 = 0");
    }
    return LinearModel{lu.solve(rhs)};
  }
  return LinearModel{sys.ldlt().solve(rhs)};
}

/// Bradley-Terry negative log-likelihood of one comparison given the score
/// difference (side A minus side B).
inline double bt_loss(double score_diff, sup::Side label) {
  const double m = label == sup::Side::A ? score_diff : -score_diff;
  // -log sigma(m) = log(1 + exp(-m)), computed stably.
  if (m > 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

struct TrainConfig {
  double learning_rate = 1.0;
  long epochs = 300;
  double l2 = 0.0;
  long batch_size = 0;  ///< 0 or >= n means full batch
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
  }
};

struct FitReport {
  std::vector<double> loss;       ///< full-data loss per epoch
  std::vector<double> grad_norm;  ///< full-data gradient norm per epoch
  double final_grad_norm = 0.0;
};

/// Gradient descent on the mean Bradley-Terry loss of w'(phi_a - phi_b).
/// Full batch by default; mini-batches shuffle deterministically from the
/// config seed. Raises DivergenceError when the full-data loss increases for
/// ten consecutive epochs.
inline LinearModel fit_bradley_terry(const std::vector<sup::PreferencePair>& pairs,
                                     const TrainConfig& cfg,
                                     FitReport* report = nullptr,
                                     std::ostream* trace_csv = nullptr) {
  cfg.validate();
  if (pairs.empty()) throw EmptyEval("no training pairs");
  const std::size_t n = pairs.size();
  const std::size_t d = pairs.front().features_a.size();
  if (d == 0) throw ShapeError("pairs carry no features");

  Eigen::MatrixXd diff(n, d);
  Eigen::VectorXd sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pairs[i];
    if (p.features_a.size() != d || p.features_b.size() != d) {
      throw ShapeError("inconsistent feature dimensions across pairs");
    }
    for (std::size_t k = 0; k < d; ++k) {
      diff(static_cast<long>(i), static_cast<long>(k)) =
          p.features_a[k] - p.features_b[k];
    }
    sign[static_cast<long>(i)] = p.label == sup::Side::A ? 1.0 : -1.0;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  auto full_loss_grad = [&](const Eigen::VectorXd& wv, Eigen::VectorXd* grad) {
    Eigen::VectorXd margins = (diff * wv).cwiseProduct(sign);
    double loss = 0.0;
    Eigen::VectorXd coeff(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = margins[static_cast<long>(i)];
      loss += m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      // d/dm of -log sigma(m) is -sigma(-m).
      const double sig_neg = 1.0 / (1.0 + std::exp(m));
      coeff[static_cast<long>(i)] = -sig_neg * sign[static_cast<long>(i)];
    }
    loss /= static_cast<double>(n);
    loss += 0.5 * cfg.l2 * wv.squaredNorm();
    if (grad) {
      *grad = diff.transpose() * coeff / static_cast<double>(n) + cfg.l2 * wv;
    }
    return loss;
  };

  const bool minibatch = cfg.batch_size > 0 && static_cast<std::size_t>(cfg.batch_size) < n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  prob::RngStream shuffle_rng = prob::derive_stream(cfg.seed, 0x5bf03635);

  if (report) {
    report->loss.clear();
    report->grad_norm.clear();
  }
  if (trace_csv) *trace_csv << "epoch,loss,grad_norm\n";

  int rising = 0;
  double prev_loss = std::numeric_limits<double>::infinity();
  std::vector<double> loss_trace;
  Eigen::VectorXd grad(d);
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (minibatch) {
      // Fisher-Yates from the dedicated shuffle stream.
      for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = shuffle_rng.next_index(i + 1);
        std::swap(order[i], order[j]);
      }
      for (std::size_t start = 0; start < n;
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (std::size_t i = start; i < stop; ++i) {
          const std::size_t r = order[i];
          const double m = sign[static_cast<long>(r)] * diff.row(static_cast<long>(r)).dot(w);
          const double sig_neg = 1.0 / (1.0 + std::exp(m));
          g -= sig_neg * sign[static_cast<long>(r)] * diff.row(static_cast<long>(r)).transpose();
        }
        g /= static_cast<double>(stop - start);
        g += cfg.l2 * w;
        w -= cfg.learning_rate * g;
      }
    } else {
      full_loss_grad(w, &grad);
      w -= cfg.learning_rate * grad;
    }

    const double loss = full_loss_grad(w, &grad);
    const double gnorm = grad.norm();
    loss_trace.push_back(loss);
    if (report) {
      report->loss.push_back(loss);
      report->grad_norm.push_back(gnorm);
      report->final_grad_norm = gnorm;
    }
    if (trace_csv) {
      *trace_csv << epoch << ',' << loss << ',' << gnorm << '\n';
    }
    if (loss > prev_loss) {
      if (++rising >= 10) {
        throw DivergenceError("training loss increased for 10 consecutive epochs",
                              loss_trace);
      }
    } else {
      rising = 0;
    }
    prev_loss = loss;
  }
  return LinearModel{w};
}

enum class Against { label, truth };

/// Fraction of pairs on which the higher-scored side matches the reference
/// side; exact ties count one half.
inline double pairwise_accuracy(const std::function<double(std::span<const double>)>& scorer,
                                const std::vector<sup::PreferencePair>& pairs,
                                Against against) {
  if (pairs.empty()) throw EmptyEval("no evaluation pairs");
  double correct = 0.0;
  for (const auto& p : pairs) {
    sup::Side ref;
    if (against == Against::label) {
      ref = p.label;
    } else {
      if (!p.truth) throw EmptyEval("truth missing on pair " + p.pair_id);
      ref = *p.truth;
    }
    const double sa = scorer(p.features_a);
    const double sb = scorer(p.features_b);
    if (sa == sb) {
      correct += 0.5;
    } else {
      const sup::Side winner = sa > sb ? sup::Side::A : sup::Side::B;
      if (winner == ref) correct += 1.0;
    }
  }
  return correct / static_cast<double>(pairs.size());
}

/// Finite class with surrogate losses L_H and ground-truth losses L* per
/// member.
struct FiniteHypothesisClass {
  std::vector<std::string> members;
  std::vector<double> losses_h;
  std::vector<double> losses_star;

  void validate() const {
    if (members.empty()) throw EmptyInstance("empty hypothesis class");
    if (members.size() != losses_h.size() || members.size() != losses_star.size()) {
      throw ShapeError("hypothesis class vectors differ in length");
    }
    for (double v : losses_h) {
      if (!std::isfinite(v)) throw ConfigError("non-finite surrogate loss");
    }
    for (double v : losses_star) {
      if (!std::isfinite(v)) throw ConfigError("non-finite ground-truth loss");
    }
  }
};

struct GibbsPosterior {
  prob::Distribution weights;
  double beta = 0.0;
  prob::Distribution prior;
};

/// Gibbs posterior proportional to prior * exp(-beta * L_H), computed in
/// log-space with max subtraction so beta up to 1e6 cannot overflow.
inline GibbsPosterior gibbs_posterior(const FiniteHypothesisClass& cls, double beta,
                                      const prob::Distribution& prior) {
  cls.validate();
  prior.validate();
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (prior.size() != cls.members.size()) {
    throw ShapeError("prior size != class size");
  }
  std::vector<double> logw(cls.members.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logw.size(); ++i) {
    logw[i] = (prior.probs[i] > 0.0 ? std::log(prior.probs[i])
                                    : -std::numeric_limits<double>::infinity()) -
              beta * cls.losses_h[i];
    max_log = std::max(max_log, logw[i]);
  }
  std::vector<double> w(logw.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    if (std::isfinite(logw[i])) {
      w[i] = std::exp(logw[i] - max_log);
      z += w[i];
    }
  }
  for (double& v : w) v /= z;
  return GibbsPosterior{prob::Distribution{cls.members, w}, beta, prior};
}

inline double expected_risk(const GibbsPosterior& post, const std::vector<double>& losses) {
  if (post.weights.size() != losses.size()) {
    throw ShapeError("posterior/losses length mismatch");
  }
  double r = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    r += post.weights.probs[i] * losses[i];
  }
  return r;
}

enum class PointLoss { zero_one, squared };

/// Exact Bayes-optimal predictor from the joint law of (signal, target):
/// posterior mode under 0-1 loss, posterior mean under squared loss, plus the
/// achieved risk. No estimator reading only the signal can do better.
struct BayesPredictor {
  std::vector<std::string> signal_support;
  std::vector<std::string> mode_action;    ///< filled for 0-1 loss
  std::vector<double> mean_action;         ///< filled for squared loss
  double bayes_risk = 0.0;
};

inline BayesPredictor bayes_optimal_from_joint(const prob::JointDistribution& j,
                                               PointLoss loss) {
  if (j.rank() != 2) throw AxisError("bayes_optimal_from_joint expects axes (s, y)");
  const auto& s_axis = j.axes()[0];
  const auto& y_axis = j.axes()[1];
  const std::size_t ns = s_axis.support.size(), ny = y_axis.support.size();
  const auto& t = j.table();

  BayesPredictor out;
  out.signal_support = s_axis.support;
  double risk = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    double ps = 0.0;
    for (std::size_t y = 0; y < ny; ++y) ps += t[s * ny + y];
    if (loss == PointLoss::zero_one) {
      std::size_t best = 0;
      double best_p = t[s * ny];
      for (std::size_t y = 1; y < ny; ++y) {
        if (t[s * ny + y] > best_p) {
          best_p = t[s * ny + y];
          best = y;
        }
      }
      out.mode_action.push_back(y_axis.support[best]);
      risk += ps - best_p;
    } else {
      if (ps <= 0.0) {
        out.mean_action.push_back(0.0);
        continue;
      }
      double mean = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        mean += t[s * ny + y] * sup::detail::parse_symbol(y_axis.support[y]);
      }
      mean /= ps;
      out.mean_action.push_back(mean);
      for (std::size_t y = 0; y < ny; ++y) {
        const double yv = sup::detail::parse_symbol(y_axis.support[y]);
        risk += t[s * ny + y] * (yv - mean) * (yv - mean);
      }
    }
  }
  out.bayes_risk = risk;
  return out;
}

}  // namespace hbi::learn
