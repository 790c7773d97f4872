#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hbi/errors.hpp"
#include "hbi/rng.hpp"

namespace hbi::prob {

inline constexpr double kMassTol = 1e-12;

/// Finite-support probability mass function over named symbols.
struct Distribution {
  std::vector<std::string> support;
  std::vector<double> probs;

  std::size_t size() const { return support.size(); }

  std::size_t index_of(std::string_view symbol) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (support[i] == symbol) return i;
    }
    throw ShapeError("symbol not in support: " + std::string(symbol));
  }

  double prob_of(std::string_view symbol) const { return probs[index_of(symbol)]; }

  void validate() const {
    if (support.empty()) throw InvalidDistribution("empty support");
    if (support.size() != probs.size()) {
      throw InvalidDistribution("support/probs length mismatch");
    }
    double mass = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw InvalidDistribution("negative or NaN probability");
      mass += p;
    }
    if (std::abs(mass - 1.0) > kMassTol) {
      throw InvalidDistribution("total mass " + std::to_string(mass) + " != 1");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& s : support) {
      if (!seen.insert(s).second) {
        throw InvalidDistribution("duplicate support symbol: " + s);
      }
    }
  }
};

/// Normalizes nonnegative weights into a Distribution.
inline Distribution make_distribution(const std::vector<double>& weights,
                                      const std::vector<std::string>& support) {
  if (weights.empty() || weights.size() != support.size()) {
    throw InvalidDistribution("weights/support length mismatch or empty");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidDistribution("negative weight");
    total += w;
  }
  if (total <= 0.0) throw InvalidDistribution("all-zero weights");
  Distribution d{support, {}};
  d.probs.reserve(weights.size());
  for (double w : weights) d.probs.push_back(w / total);
  d.validate();
  return d;
}

/// Row-stochastic conditional distribution P(output | input).
struct Channel {
  std::vector<std::string> input_support;
  std::vector<std::string> output_support;
  std::vector<std::vector<double>> rows;

  std::size_t n_inputs() const { return input_support.size(); }
  std::size_t n_outputs() const { return output_support.size(); }

  void validate() const {
    if (input_support.empty() || output_support.empty()) {
      throw InvalidDistribution("empty channel support");
    }
    if (rows.size() != input_support.size()) {
      throw ShapeError("row count does not match input support");
    }
    for (const auto& row : rows) {
      if (row.size() != output_support.size()) {
        throw ShapeError("row width does not match output support");
      }
      double mass = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw InvalidDistribution("negative channel entry");
        mass += p;
      }
      if (std::abs(mass - 1.0) > kMassTol) {
        throw InvalidDistribution("channel row mass != 1");
      }
    }
    auto unique = [](const std::vector<std::string>& v) {
      std::unordered_set<std::string_view> seen;
      for (const auto& s : v) {
        if (!seen.insert(s).second) return false;
      }
      return true;
    };
    if (!unique(input_support) || !unique(output_support)) {
      throw InvalidDistribution("duplicate channel support symbol");
    }
  }
};

inline Channel make_identity_channel(const std::vector<std::string>& support) {
  Channel ch{support, support, {}};
  ch.rows.assign(support.size(), std::vector<double>(support.size(), 0.0));
  for (std::size_t i = 0; i < support.size(); ++i) ch.rows[i][i] = 1.0;
  return ch;
}

/// Marginal of the channel output when the input follows d.
inline Distribution push_forward(const Distribution& d, const Channel& ch) {
  if (d.support != ch.input_support) {
    throw ShapeError("push_forward: distribution support != channel input support");
  }
  Distribution out{ch.output_support,
                   std::vector<double>(ch.output_support.size(), 0.0)};
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    for (std::size_t j = 0; j < out.probs.size(); ++j) {
      out.probs[j] += d.probs[i] * ch.rows[i][j];
    }
  }
  return out;
}

struct Axis {
  std::string name;
  std::vector<std::string> support;
};

/// Dense joint distribution over a small product of named axes.
/// Table is row-major with the last axis fastest.
class JointDistribution {
 public:
  JointDistribution(std::vector<Axis> axes, std::vector<double> table)
      : axes_(std::move(axes)), table_(std::move(table)) {
    rebuild_strides();
    validate();
  }

  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t rank() const { return axes_.size(); }

  std::size_t axis_index(std::string_view name) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      if (axes_[i].name == name) return i;
    }
    throw AxisError("no axis named " + std::string(name));
  }

  std::size_t dim(std::size_t axis) const { return axes_[axis].support.size(); }

  double total_mass() const {
    return std::accumulate(table_.begin(), table_.end(), 0.0);
  }

  void validate() const {
    if (axes_.empty()) throw AxisError("joint with no axes");
    std::size_t cells = 1;
    for (const auto& a : axes_) {
      if (a.support.empty()) throw InvalidDistribution("empty axis support");
      cells *= a.support.size();
    }
    if (cells != table_.size()) throw ShapeError("table size does not match axes");
    for (double p : table_) {
      if (!(p >= 0.0)) throw InvalidDistribution("negative joint mass");
    }
    if (std::abs(total_mass() - 1.0) > kMassTol) {
      throw InvalidDistribution("joint mass != 1");
    }
  }

  /// Marginal over the given axes, in the given order.
  JointDistribution marginal(const std::vector<std::size_t>& keep) const {
    if (keep.empty()) throw AxisError("marginal over no axes");
    std::vector<Axis> out_axes;
    std::vector<std::size_t> out_dims;
    for (std::size_t k : keep) {
      if (k >= axes_.size()) throw AxisError("marginal axis out of range");
      out_axes.push_back(axes_[k]);
      out_dims.push_back(dim(k));
    }
    std::size_t out_cells = 1;
    for (std::size_t d : out_dims) out_cells *= d;
    std::vector<double> out(out_cells, 0.0);

    std::vector<std::size_t> coord(axes_.size(), 0);
    for (std::size_t flat = 0; flat < table_.size(); ++flat) {
      std::size_t rem = flat;
      for (std::size_t a = 0; a < axes_.size(); ++a) {
        coord[a] = rem / strides_[a];
        rem %= strides_[a];
      }
      std::size_t out_flat = 0;
      for (std::size_t i = 0; i < keep.size(); ++i) {
        out_flat = out_flat * out_dims[i] + coord[keep[i]];
      }
      out[out_flat] += table_[flat];
    }
    return JointDistribution(std::move(out_axes), std::move(out));
  }

  Distribution axis_marginal(std::size_t axis) const {
    auto m = marginal({axis});
    return Distribution{m.axes()[0].support, m.table()};
  }

  /// Replaces the axes in `group` (order given) by a single tuple-valued axis
  /// placed at the position of group.front(). This is the lossless
  /// concatenation combiner used for information computations.
  JointDistribution merge_axes(const std::vector<std::size_t>& group,
                               const std::string& name) const {
    if (group.size() < 2) throw AxisError("merge_axes needs at least two axes");
    for (std::size_t g : group) {
      if (g >= axes_.size()) throw AxisError("merge axis out of range");
    }
    std::vector<std::string> tuple_support;
    {
      std::vector<std::size_t> coord(group.size(), 0);
      bool done = false;
      while (!done) {
        std::string sym = "(";
        for (std::size_t i = 0; i < group.size(); ++i) {
          if (i) sym += "|";
          sym += axes_[group[i]].support[coord[i]];
        }
        sym += ")";
        tuple_support.push_back(std::move(sym));
        for (std::size_t i = group.size(); i-- > 0;) {
          if (++coord[i] < dim(group[i])) break;
          coord[i] = 0;
          if (i == 0) done = true;
        }
      }
    }

    std::vector<Axis> out_axes;
    std::vector<std::size_t> kept;  // original axes kept as-is
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      if (a == group.front()) {
        out_axes.push_back(Axis{name, tuple_support});
      } else if (std::find(group.begin(), group.end(), a) == group.end()) {
        out_axes.push_back(axes_[a]);
        kept.push_back(a);
      }
    }

    std::vector<std::size_t> out_dims;
    for (const auto& a : out_axes) out_dims.push_back(a.support.size());
    std::size_t out_cells = 1;
    for (std::size_t d : out_dims) out_cells *= d;
    std::vector<double> out(out_cells, 0.0);

    const std::size_t merged_pos = merged_position(group);
    std::vector<std::size_t> coord(axes_.size(), 0);
    for (std::size_t flat = 0; flat < table_.size(); ++flat) {
      std::size_t rem = flat;
      for (std::size_t a = 0; a < axes_.size(); ++a) {
        coord[a] = rem / strides_[a];
        rem %= strides_[a];
      }
      std::size_t tuple_idx = 0;
      for (std::size_t g : group) tuple_idx = tuple_idx * dim(g) + coord[g];

      std::size_t out_flat = 0;
      std::size_t kept_cursor = 0;
      for (std::size_t o = 0; o < out_axes.size(); ++o) {
        const std::size_t c = (o == merged_pos) ? tuple_idx : coord[kept[kept_cursor++]];
        out_flat = out_flat * out_dims[o] + c;
      }
      out[out_flat] += table_[flat];
    }
    return JointDistribution(std::move(out_axes), std::move(out));
  }

 private:
  std::size_t merged_position(const std::vector<std::size_t>& group) const {
    std::size_t pos = 0;
    for (std::size_t a = 0; a < group.front(); ++a) {
      if (std::find(group.begin(), group.end(), a) == group.end()) ++pos;
    }
    return pos;
  }

  void rebuild_strides() {
    strides_.assign(axes_.size(), 1);
    for (std::size_t i = axes_.size(); i-- > 1;) {
      strides_[i - 1] = strides_[i] * axes_[i].support.size();
    }
  }

  std::vector<Axis> axes_;
  std::vector<double> table_;
  std::vector<std::size_t> strides_;
};

enum class ChainStructure { chain, fan_out };

/// Joint law of a source pushed through channels, either sequentially
/// (chain: x0 -> x1 -> ... -> xk) or in parallel from the source
/// (fan-out: y -> s0, y -> s1, ...). Fan-out branches are conditionally
/// independent given the input; correlated branches must be expressed as a
/// single product-output channel.
inline JointDistribution joint_from_chain(
    const Distribution& source, const std::vector<Channel>& chs,
    ChainStructure structure, std::vector<std::string> axis_names = {}) {
  source.validate();
  if (chs.empty()) throw ShapeError("joint_from_chain: no channels");
  for (const auto& c : chs) c.validate();

  std::vector<Axis> axes;
  if (structure == ChainStructure::chain) {
    const std::vector<std::string>* prev = &source.support;
    for (std::size_t i = 0; i < chs.size(); ++i) {
      if (chs[i].input_support != *prev) {
        throw ShapeError("chain: channel " + std::to_string(i) +
                         " input support mismatch");
      }
      prev = &chs[i].output_support;
    }
    axes.push_back(Axis{"x0", source.support});
    for (std::size_t i = 0; i < chs.size(); ++i) {
      axes.push_back(Axis{"x" + std::to_string(i + 1), chs[i].output_support});
    }
  } else {
    for (std::size_t i = 0; i < chs.size(); ++i) {
      if (chs[i].input_support != source.support) {
        throw ShapeError("fan-out: channel " + std::to_string(i) +
                         " input support mismatch");
      }
    }
    axes.push_back(Axis{"y", source.support});
    for (std::size_t i = 0; i < chs.size(); ++i) {
      axes.push_back(Axis{"s" + std::to_string(i), chs[i].output_support});
    }
  }
  if (!axis_names.empty()) {
    if (axis_names.size() != axes.size()) {
      throw AxisError("axis_names length mismatch");
    }
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i].name = axis_names[i];
  }

  std::vector<std::size_t> dims;
  for (const auto& a : axes) dims.push_back(a.support.size());
  std::size_t cells = 1;
  for (std::size_t d : dims) cells *= d;
  std::vector<double> table(cells, 0.0);

  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
  std::vector<std::size_t> coord(dims.size(), 0);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      coord[a] = rem / strides[a];
      rem %= strides[a];
    }
    double p = source.probs[coord[0]];
    if (structure == ChainStructure::chain) {
      for (std::size_t i = 0; i < chs.size() && p > 0.0; ++i) {
        p *= chs[i].rows[coord[i]][coord[i + 1]];
      }
    } else {
      for (std::size_t i = 0; i < chs.size() && p > 0.0; ++i) {
        p *= chs[i].rows[coord[0]][coord[i + 1]];
      }
    }
    table[flat] = p;
  }
  return JointDistribution(std::move(axes), std::move(table));
}

/// Draws n symbols by inverse CDF; a pure function of (d, rng state, n).
inline std::vector<std::string> sample(const Distribution& d, RngStream& rng,
                                       std::size_t n) {
  d.validate();
  std::vector<double> cdf(d.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    acc += d.probs[i];
    cdf[i] = acc;
  }
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.next_double();
    std::size_t idx = d.probs.size() - 1;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      if (u < cdf[i]) {
        idx = i;
        break;
      }
    }
    out.push_back(d.support[idx]);
  }
  return out;
}

}  // namespace hbi::prob
