#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pforest/dataset.hpp"
#include "pforest/numeric.hpp"

namespace pforest {

// Rows sitting at one tree node. Root has depth 1.
struct NodeSample {
  std::vector<int> row_indices;
  int depth = 1;
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double raw_gain = 0.0;        // cost reduction before any penalty
  double penalized_gain = 0.0;  // what the search actually maximizes
};

inline int majority_count(const Dataset& d, const std::vector<int>& rows) {
  std::vector<int> counts(static_cast<std::size_t>(d.n_classes()), 0);
  for (int r : rows) ++counts[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(r)])];
  return *std::max_element(counts.begin(), counts.end());
}

// Regression: total sum of squared deviations from the node mean.
// Classification: misclassification rate under majority vote.
inline double node_cost(const Dataset& d, const std::vector<int>& rows) {
  if (rows.empty()) throw std::invalid_argument("node_cost: empty node");
  const auto n = static_cast<double>(rows.size());
  if (d.task == Task::kRegression) {
    StableSum sum;
    for (int r : rows) sum.add(d.y[static_cast<std::size_t>(r)]);
    const double mean = sum.value() / n;
    StableSum sse;
    for (int r : rows) {
      const double dev = d.y[static_cast<std::size_t>(r)] - mean;
      sse.add(dev * dev);
    }
    return sse.value();
  }
  return 1.0 - static_cast<double>(majority_count(d, rows)) / n;
}

// Cost reduction of splitting `node` on (feature, threshold), computed as
//   cost(D) - (|L|/|D| cost(L) + |R|/|D| cost(R)),
// left child taking value <= threshold. For classification the weighted form
// collapses to (majority_L + majority_R - majority_D) / |D|, an exact integer
// over n, so tie ranks and the gain>0 cutoff carry no rounding noise.
inline double split_gain(const NodeSample& node, int feature, double threshold,
                         const Dataset& d) {
  std::vector<int> left, right;
  for (int r : node.row_indices) {
    const double v = d.columns[static_cast<std::size_t>(feature)][static_cast<std::size_t>(r)];
    (v <= threshold ? left : right).push_back(r);
  }
  if (left.empty() || right.empty())
    throw std::invalid_argument("split_gain: threshold yields an empty child");
  const auto n = static_cast<double>(node.row_indices.size());
  if (d.task == Task::kClassification) {
    const int delta = majority_count(d, left) + majority_count(d, right) -
                      majority_count(d, node.row_indices);
    return static_cast<double>(delta) / n;
  }
  const double wl = static_cast<double>(left.size()) / n;
  const double wr = static_cast<double>(right.size()) / n;
  return node_cost(d, node.row_indices) - (wl * node_cost(d, left) + wr * node_cost(d, right));
}

// Penalty rule: a feature already in the used set keeps its raw gain; a new
// feature is scaled by lambda (or lambda^depth when the depth penalty is on).
inline double penalized_gain(double raw_gain, double lambda_i, bool in_used_set, int depth,
                             bool depth_penalty) {
  if (in_used_set) return raw_gain;
  if (depth_penalty) return raw_gain * pow_int(lambda_i, depth);
  return raw_gain * lambda_i;
}

// Exhaustive best-split search with reusable scratch buffers. Candidate
// thresholds are the midpoints between consecutive distinct sorted in-node
// values; the winner maximizes the penalized gain with ties broken by lower
// feature index, then smaller threshold. Accumulation orders are canonical —
// node statistics ascend by row id, sweeps by (value, row id) — and sums are
// compensated, so the same node reached with rows in any order, or through
// the presorted tree grower, produces bit-identical gains, and exact gain
// ties (notably on exactly-representable targets) resolve by the documented
// tie-break on every platform.
class SplitFinder {
 public:
  explicit SplitFinder(const Dataset& d) : data_(&d) {}

  // lambdas == nullptr disables penalization entirely (raw gains compete).
  // used == nullptr means no feature counts as used.
  std::optional<SplitCandidate> best_split(const NodeSample& node,
                                           const std::vector<int>& candidate_features,
                                           const std::vector<double>* lambdas,
                                           const std::vector<std::uint8_t>* used,
                                           bool depth_penalty) {
    const Dataset& d = *data_;
    const std::size_t m = node.row_indices.size();
    if (m < 2) return std::nullopt;
    rows_ = node.row_indices;
    std::sort(rows_.begin(), rows_.end());

    SplitCandidate best;
    best.penalized_gain = 0.0;
    bool found = false;

    if (d.task == Task::kRegression) {
      prepare_regression();
      for (int f : candidate_features) {
        const double factor = penalty_factor(f, lambdas, used, depth_penalty, node.depth);
        sweep_regression(f, factor, best, found);
      }
    } else {
      prepare_classification();
      for (int f : candidate_features) {
        const double factor = penalty_factor(f, lambdas, used, depth_penalty, node.depth);
        sweep_classification(f, factor, best, found);
      }
    }
    if (!found || !(best.penalized_gain > 0.0)) return std::nullopt;
    return best;
  }

 private:
  struct ValueTarget {
    double value;
    int row;
    double z;  // centered target (regression)
    int cls;   // class code (classification)
  };

  double penalty_factor(int feature, const std::vector<double>* lambdas,
                        const std::vector<std::uint8_t>* used, bool depth_penalty,
                        int depth) const {
    if (lambdas == nullptr) return 1.0;
    if (used != nullptr && (*used)[static_cast<std::size_t>(feature)]) return 1.0;
    const double lam = (*lambdas)[static_cast<std::size_t>(feature)];
    return depth_penalty ? pow_int(lam, depth) : lam;
  }

  void prepare_regression() {
    const Dataset& d = *data_;
    const std::size_t m = rows_.size();
    StableSum sum;
    for (int r : rows_) sum.add(d.y[static_cast<std::size_t>(r)]);
    center_ = sum.value() / static_cast<double>(m);
    z_.resize(m);
    StableSum zsum, zsq;
    for (std::size_t k = 0; k < m; ++k) {
      const double z = d.y[static_cast<std::size_t>(rows_[k])] - center_;
      z_[k] = z;
      zsum.add(z);
      zsq.add(z * z);
    }
    total_sum_ = zsum.value();
    total_ssq_ = zsq.value();
    const auto n = static_cast<double>(m);
    cost_node_ = total_ssq_ - total_sum_ * total_sum_ / n;
  }

  void prepare_classification() {
    const Dataset& d = *data_;
    counts_node_.assign(static_cast<std::size_t>(d.n_classes()), 0);
    for (int r : rows_)
      ++counts_node_[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(r)])];
    majority_node_ = *std::max_element(counts_node_.begin(), counts_node_.end());
  }

  // Midpoint between adjacent distinct values; nudged down to the left value
  // if rounding lands it on the right one, so "value <= t" keeps the intended
  // partition.
  static double midpoint(double lo, double hi) {
    const double t = (lo + hi) / 2.0;
    return t < hi ? t : lo;
  }

  void sweep_regression(int feature, double factor, SplitCandidate& best, bool& found) {
    const Dataset& d = *data_;
    const auto& col = d.columns[static_cast<std::size_t>(feature)];
    const std::size_t m = rows_.size();
    pairs_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      pairs_[k].value = col[static_cast<std::size_t>(rows_[k])];
      pairs_[k].row = rows_[k];
      pairs_[k].z = z_[k];
    }
    std::sort(pairs_.begin(), pairs_.end(), [](const ValueTarget& a, const ValueTarget& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
    if (pairs_.front().value == pairs_.back().value) return;

    const auto n = static_cast<double>(m);
    StableSum sum_l, ssq_l;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      sum_l.add(pairs_[k].z);
      ssq_l.add(pairs_[k].z * pairs_[k].z);
      if (pairs_[k].value == pairs_[k + 1].value) continue;
      const auto nl = static_cast<double>(k + 1);
      const auto nr = static_cast<double>(m - k - 1);
      const double sl = sum_l.value();
      const double ql = ssq_l.value();
      const double sr = total_sum_ - sl;
      const double qr = total_ssq_ - ql;
      const double cost_l = ql - sl * sl / nl;
      const double cost_r = qr - sr * sr / nr;
      double gain = cost_node_ - (nl / n * cost_l + nr / n * cost_r);
      if (gain < 0.0) gain = 0.0;
      consider(feature, midpoint(pairs_[k].value, pairs_[k + 1].value), gain, factor, best,
               found);
    }
  }

  void sweep_classification(int feature, double factor, SplitCandidate& best, bool& found) {
    const Dataset& d = *data_;
    const auto& col = d.columns[static_cast<std::size_t>(feature)];
    const std::size_t m = rows_.size();
    pairs_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const int r = rows_[k];
      pairs_[k].value = col[static_cast<std::size_t>(r)];
      pairs_[k].row = r;
      pairs_[k].cls = d.y_code[static_cast<std::size_t>(r)];
    }
    std::sort(pairs_.begin(), pairs_.end(), [](const ValueTarget& a, const ValueTarget& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
    if (pairs_.front().value == pairs_.back().value) return;

    const auto n = static_cast<double>(m);
    counts_left_.assign(counts_node_.size(), 0);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      ++counts_left_[static_cast<std::size_t>(pairs_[k].cls)];
      if (pairs_[k].value == pairs_[k + 1].value) continue;
      int max_l = 0, max_r = 0;
      for (std::size_t c = 0; c < counts_node_.size(); ++c) {
        max_l = std::max(max_l, counts_left_[c]);
        max_r = std::max(max_r, counts_node_[c] - counts_left_[c]);
      }
      // Exact integer gain over n: no rounding in tie ranks or the >0 cutoff.
      const double gain = static_cast<double>(max_l + max_r - majority_node_) / n;
      consider(feature, midpoint(pairs_[k].value, pairs_[k + 1].value), gain, factor, best,
               found);
    }
  }

  void consider(int feature, double threshold, double raw_gain, double factor,
                SplitCandidate& best, bool& found) {
    const double penalized = raw_gain * factor;
    // Features ascend and thresholds ascend within a feature, so strict
    // comparison realizes the (feature, threshold) tie-break.
    if (!found || penalized > best.penalized_gain) {
      best.feature = feature;
      best.threshold = threshold;
      best.raw_gain = raw_gain;
      best.penalized_gain = penalized;
      found = true;
    }
  }

  const Dataset* data_;
  double center_ = 0.0;
  double total_sum_ = 0.0;
  double total_ssq_ = 0.0;
  double cost_node_ = 0.0;
  int majority_node_ = 0;
  std::vector<int> rows_;  // node rows canonicalized to ascending row id
  std::vector<double> z_;
  std::vector<int> counts_node_;
  std::vector<int> counts_left_;
  std::vector<ValueTarget> pairs_;
};

// One-off convenience wrapper around SplitFinder. candidate_features must be
// sorted ascending for the documented tie-break.
inline std::optional<SplitCandidate> best_split(const NodeSample& node,
                                                const std::vector<int>& candidate_features,
                                                const Dataset& d,
                                                const std::vector<double>* lambdas,
                                                const std::vector<std::uint8_t>* used,
                                                bool depth_penalty) {
  SplitFinder finder(d);
  return finder.best_split(node, candidate_features, lambdas, used, depth_penalty);
}

}  // namespace pforest
