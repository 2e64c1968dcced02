#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pforest/dataset.hpp"
#include "pforest/numeric.hpp"
#include "pforest/prng.hpp"
#include "pforest/split.hpp"

namespace pforest {

// feature == -1 marks a leaf; children index into Tree::nodes.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;  // mean response, or class code for classification
  double gain = 0.0;        // committed raw gain; 0 at leaves
};

struct GrowConfig {
  int mtry = 0;           // candidate features per node; 0 = all
  int min_node_size = 0;  // 0 = task default (5 regression, 1 classification)
  int max_depth = 0;      // 0 = unlimited
  bool depth_penalty = false;
  std::uint64_t seed = 0;  // used by the standalone grow_tree overload
};

struct Tree {
  std::vector<Node> nodes;          // nodes[0] is the root
  std::vector<double> gain_totals;  // per-feature sum of committed raw gains
};

// One record per committed split, in growth order (depth-first, left first).
struct SplitTrace {
  int depth = 0;
  int n_rows = 0;
  int feature = -1;
  double threshold = 0.0;
  double raw_gain = 0.0;
  double penalized_gain = 0.0;
};

inline int default_min_node_size(Task task) { return task == Task::kRegression ? 5 : 1; }

// Row ids of every column sorted by (value, row id) — a total order, so the
// layout is identical on every platform. Built once per dataset and shared by
// all trees grown on it.
struct SortedColumns {
  std::vector<std::vector<int>> order;

  static SortedColumns build(const Dataset& d) {
    SortedColumns s;
    s.order.resize(static_cast<std::size_t>(d.p()));
    for (int f = 0; f < d.p(); ++f) {
      auto& ord = s.order[static_cast<std::size_t>(f)];
      ord.resize(static_cast<std::size_t>(d.n()));
      for (int r = 0; r < d.n(); ++r) ord[static_cast<std::size_t>(r)] = r;
      const auto& col = d.columns[static_cast<std::size_t>(f)];
      std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        const double va = col[static_cast<std::size_t>(a)];
        const double vb = col[static_cast<std::size_t>(b)];
        return va < vb || (va == vb && a < b);
      });
    }
    return s;
  }
};

namespace detail {

// Grows one tree over presorted feature lists: the sample's row ids are kept
// sorted per feature, each node owning one index range of every list, and a
// committed split stably partitions all lists in place. This keeps the split
// sweep free of per-node sorting. An extra list sorted by row id carries the
// node statistics, so every accumulation order is a platform-independent
// total order: node stats ascend by row id, split sweeps by (value, row id).
// Gain arithmetic matches SplitFinder expression for expression (the
// cross-check lives in the test suite).
class TreeGrower {
 public:
  TreeGrower(const Dataset& d, const SortedColumns& sorted, const GrowConfig& cfg,
             const std::vector<double>* lambdas, std::vector<std::uint8_t>* used, Rng& rng,
             std::vector<SplitTrace>* trace)
      : data_(d),
        sorted_(sorted),
        cfg_(cfg),
        lambdas_(lambdas),
        used_(used),
        rng_(rng),
        trace_(trace),
        mtry_(cfg.mtry > 0 ? std::min(cfg.mtry, d.p()) : d.p()),
        min_node_(cfg.min_node_size > 0 ? cfg.min_node_size : default_min_node_size(d.task)) {}

  Tree grow(const std::vector<int>& rows) {
    const auto p = static_cast<std::size_t>(data_.p());
    const std::size_t m = rows.size();
    Tree tree;
    tree.gain_totals.assign(p, 0.0);

    // Sample lists per feature: walk the global order emitting each sampled
    // row with its multiplicity, so every list holds the same multiset. List
    // p is the row-id-ordered copy used for node statistics.
    counts_.assign(static_cast<std::size_t>(data_.n()), 0);
    for (int r : rows) ++counts_[static_cast<std::size_t>(r)];
    lists_.resize((p + 1) * m);
    for (std::size_t f = 0; f < p; ++f) {
      std::size_t idx = f * m;
      for (int row : sorted_.order[f])
        for (int c = 0; c < counts_[static_cast<std::size_t>(row)]; ++c)
          lists_[idx++] = row;
    }
    {
      std::size_t idx = p * m;
      for (int row = 0; row < data_.n(); ++row)
        for (int c = 0; c < counts_[static_cast<std::size_t>(row)]; ++c)
          lists_[idx++] = row;
    }
    for (int r : rows) counts_[static_cast<std::size_t>(r)] = 0;

    scratch_.resize(m);
    if (data_.task == Task::kRegression) zbuf_.resize(static_cast<std::size_t>(data_.n()));
    sample_size_ = m;
    grow_node(tree, 0, m, 1);
    return tree;
  }

 private:
  const int* list_of(int feature) const {
    return lists_.data() + static_cast<std::size_t>(feature) * sample_size_;
  }

  // Node rows ascending by row id (bootstrap duplicates adjacent).
  const int* node_rows() const { return list_of(data_.p()); }

  int grow_node(Tree& tree, std::size_t lo, std::size_t hi, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    // Random-candidate draws happen only when a split is actually searched,
    // so stopping checks come first.
    const bool stop = hi - lo < 2 * static_cast<std::size_t>(min_node_) ||
                      (cfg_.max_depth > 0 && depth >= cfg_.max_depth) || is_pure(lo, hi);
    SplitCandidate best;
    bool found = false;
    if (!stop) {
      const auto candidates = rng_.sample_indices(data_.p(), mtry_, sample_scratch_);
      prepare_stats(lo, hi);
      for (int f : candidates) {
        const double factor = penalty_factor(f, depth);
        if (data_.task == Task::kRegression)
          sweep_regression(f, lo, hi, factor, best, found);
        else
          sweep_classification(f, lo, hi, factor, best, found);
      }
    }
    if (!found || !(best.penalized_gain > 0.0)) {
      make_leaf(tree.nodes[static_cast<std::size_t>(id)], lo, hi);
      return id;
    }

    tree.gain_totals[static_cast<std::size_t>(best.feature)] += best.raw_gain;
    if (used_ != nullptr) (*used_)[static_cast<std::size_t>(best.feature)] = 1;
    if (trace_ != nullptr)
      trace_->push_back({depth, static_cast<int>(hi - lo), best.feature, best.threshold,
                         best.raw_gain, best.penalized_gain});

    const std::size_t nl = partition_all(lo, hi, best.feature, best.threshold);
    const int feature = best.feature;
    const double threshold = best.threshold;
    const double raw_gain = best.raw_gain;
    const int left_id = grow_node(tree, lo, lo + nl, depth + 1);
    const int right_id = grow_node(tree, lo + nl, hi, depth + 1);
    Node& n = tree.nodes[static_cast<std::size_t>(id)];
    n.feature = feature;
    n.threshold = threshold;
    n.gain = raw_gain;
    n.left = left_id;
    n.right = right_id;
    return id;
  }

  double penalty_factor(int feature, int depth) const {
    if (lambdas_ == nullptr) return 1.0;
    if (used_ != nullptr && (*used_)[static_cast<std::size_t>(feature)]) return 1.0;
    const double lam = (*lambdas_)[static_cast<std::size_t>(feature)];
    return cfg_.depth_penalty ? pow_int(lam, depth) : lam;
  }

  bool is_pure(std::size_t lo, std::size_t hi) const {
    const int* rows = node_rows();
    if (data_.task == Task::kRegression) {
      const double first = data_.y[static_cast<std::size_t>(rows[lo])];
      for (std::size_t k = lo; k < hi; ++k)
        if (data_.y[static_cast<std::size_t>(rows[k])] != first) return false;
      return true;
    }
    const int first = data_.y_code[static_cast<std::size_t>(rows[lo])];
    for (std::size_t k = lo; k < hi; ++k)
      if (data_.y_code[static_cast<std::size_t>(rows[k])] != first) return false;
    return true;
  }

  void prepare_stats(std::size_t lo, std::size_t hi) {
    const int* rows = node_rows();
    const auto n = static_cast<double>(hi - lo);
    if (data_.task == Task::kRegression) {
      StableSum sum;
      for (std::size_t k = lo; k < hi; ++k) sum.add(data_.y[static_cast<std::size_t>(rows[k])]);
      center_ = sum.value() / n;
      StableSum zsum, zsq;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto r = static_cast<std::size_t>(rows[k]);
        const double z = data_.y[r] - center_;
        zbuf_[r] = z;
        zsum.add(z);
        zsq.add(z * z);
      }
      total_sum_ = zsum.value();
      total_ssq_ = zsq.value();
      cost_node_ = total_ssq_ - total_sum_ * total_sum_ / n;
      return;
    }
    counts_node_.assign(static_cast<std::size_t>(data_.n_classes()), 0);
    for (std::size_t k = lo; k < hi; ++k)
      ++counts_node_[static_cast<std::size_t>(data_.y_code[static_cast<std::size_t>(rows[k])])];
    majority_node_ = *std::max_element(counts_node_.begin(), counts_node_.end());
  }

  // Midpoint between adjacent distinct values; nudged down to the left value
  // if rounding lands it on the right one, so "value <= t" keeps the intended
  // partition.
  static double midpoint(double a, double b) {
    const double t = (a + b) / 2.0;
    return t < b ? t : a;
  }

  void sweep_regression(int feature, std::size_t lo, std::size_t hi, double factor,
                        SplitCandidate& best, bool& found) {
    const int* rows = list_of(feature);
    const auto& col = data_.columns[static_cast<std::size_t>(feature)];
    if (col[static_cast<std::size_t>(rows[lo])] == col[static_cast<std::size_t>(rows[hi - 1])])
      return;
    const auto n = static_cast<double>(hi - lo);
    StableSum sum_l, ssq_l;
    for (std::size_t k = lo; k + 1 < hi; ++k) {
      const double z = zbuf_[static_cast<std::size_t>(rows[k])];
      sum_l.add(z);
      ssq_l.add(z * z);
      const double v = col[static_cast<std::size_t>(rows[k])];
      const double next = col[static_cast<std::size_t>(rows[k + 1])];
      if (v == next) continue;
      const auto nl = static_cast<double>(k + 1 - lo);
      const auto nr = static_cast<double>(hi - k - 1);
      const double sl = sum_l.value();
      const double ql = ssq_l.value();
      const double sr = total_sum_ - sl;
      const double qr = total_ssq_ - ql;
      const double cost_l = ql - sl * sl / nl;
      const double cost_r = qr - sr * sr / nr;
      double gain = cost_node_ - (nl / n * cost_l + nr / n * cost_r);
      if (gain < 0.0) gain = 0.0;
      consider(feature, midpoint(v, next), gain, factor, best, found);
    }
  }

  void sweep_classification(int feature, std::size_t lo, std::size_t hi, double factor,
                            SplitCandidate& best, bool& found) {
    const int* rows = list_of(feature);
    const auto& col = data_.columns[static_cast<std::size_t>(feature)];
    if (col[static_cast<std::size_t>(rows[lo])] == col[static_cast<std::size_t>(rows[hi - 1])])
      return;
    const auto n = static_cast<double>(hi - lo);
    counts_left_.assign(counts_node_.size(), 0);
    for (std::size_t k = lo; k + 1 < hi; ++k) {
      ++counts_left_[static_cast<std::size_t>(data_.y_code[static_cast<std::size_t>(rows[k])])];
      const double v = col[static_cast<std::size_t>(rows[k])];
      const double next = col[static_cast<std::size_t>(rows[k + 1])];
      if (v == next) continue;
      int max_l = 0, max_r = 0;
      for (std::size_t c = 0; c < counts_node_.size(); ++c) {
        max_l = std::max(max_l, counts_left_[c]);
        max_r = std::max(max_r, counts_node_[c] - counts_left_[c]);
      }
      // Exact integer gain over n: no rounding in tie ranks or the >0 cutoff.
      const double gain = static_cast<double>(max_l + max_r - majority_node_) / n;
      consider(feature, midpoint(v, next), gain, factor, best, found);
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

  // Stable in-place partition of every feature list's [lo, hi) span; returns
  // the left-child size (identical for all features — same multiset).
  std::size_t partition_all(std::size_t lo, std::size_t hi, int feature, double threshold) {
    const auto& split_col = data_.columns[static_cast<std::size_t>(feature)];
    std::size_t nl = 0;
    const auto p = static_cast<std::size_t>(data_.p());
    for (std::size_t f = 0; f <= p; ++f) {
      int* rows = lists_.data() + f * sample_size_;
      std::size_t left = 0, right = 0;
      for (std::size_t k = lo; k < hi; ++k) {
        const int r = rows[k];
        if (split_col[static_cast<std::size_t>(r)] <= threshold)
          scratch_[left++] = r;
        else
          scratch_[hi - lo - (++right)] = r;  // reversed tail, restored below
      }
      for (std::size_t k = 0; k < left; ++k) rows[lo + k] = scratch_[k];
      for (std::size_t k = 0; k < right; ++k) rows[hi - 1 - k] = scratch_[hi - lo - right + k];
      nl = left;
    }
    return nl;
  }

  void make_leaf(Node& n, std::size_t lo, std::size_t hi) const {
    const int* rows = node_rows();
    if (data_.task == Task::kRegression) {
      StableSum sum;
      for (std::size_t k = lo; k < hi; ++k) sum.add(data_.y[static_cast<std::size_t>(rows[k])]);
      n.leaf_value = sum.value() / static_cast<double>(hi - lo);
      return;
    }
    std::vector<int> counts(static_cast<std::size_t>(data_.n_classes()), 0);
    for (std::size_t k = lo; k < hi; ++k)
      ++counts[static_cast<std::size_t>(data_.y_code[static_cast<std::size_t>(rows[k])])];
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
      if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    n.leaf_value = static_cast<double>(best);  // ties fall to the lower code
  }

  const Dataset& data_;
  const SortedColumns& sorted_;
  const GrowConfig& cfg_;
  const std::vector<double>* lambdas_;
  std::vector<std::uint8_t>* used_;
  Rng& rng_;
  std::vector<SplitTrace>* trace_;
  int mtry_;
  int min_node_;
  std::size_t sample_size_ = 0;

  std::vector<int> lists_;    // p contiguous per-feature sorted row lists
  std::vector<int> scratch_;  // partition buffer
  std::vector<int> counts_;   // bootstrap multiplicities while building lists
  std::vector<int> sample_scratch_;
  std::vector<double> zbuf_;  // per-row centered target for the current node
  double center_ = 0.0;
  double total_sum_ = 0.0;
  double total_ssq_ = 0.0;
  double cost_node_ = 0.0;
  int majority_node_ = 0;
  std::vector<int> counts_node_;
  std::vector<int> counts_left_;
};

}  // namespace detail

// Grows one tree on the given rows (duplicates allowed — bootstrap samples).
// `used` is the ensemble-wide used-feature set: consulted during the search
// and updated the moment a split commits, so later nodes of this same tree
// already see the feature as used. Pass lambdas == nullptr to disable
// penalization (plain CART behaviour; `used` is still maintained). `sorted`
// lets callers reuse one SortedColumns across many trees.
inline Tree grow_tree(const Dataset& d, const std::vector<int>& rows, const GrowConfig& cfg,
                      const std::vector<double>* lambdas, std::vector<std::uint8_t>* used,
                      Rng& rng, const SortedColumns* sorted = nullptr,
                      std::vector<SplitTrace>* trace = nullptr) {
  if (rows.empty()) throw ConfigError("grow_tree: empty sample");
  if (sorted != nullptr) {
    detail::TreeGrower grower(d, *sorted, cfg, lambdas, used, rng, trace);
    return grower.grow(rows);
  }
  const SortedColumns local = SortedColumns::build(d);
  detail::TreeGrower grower(d, local, cfg, lambdas, used, rng, trace);
  return grower.grow(rows);
}

// Standalone variant seeding its own generator from cfg.seed.
inline Tree grow_tree(const Dataset& d, const std::vector<int>& rows, const GrowConfig& cfg,
                      const std::vector<double>* lambdas, std::vector<std::uint8_t>* used,
                      std::vector<SplitTrace>* trace = nullptr) {
  Rng rng(cfg.seed);
  return grow_tree(d, rows, cfg, lambdas, used, rng, nullptr, trace);
}

// x is one row in feature order (size p).
inline double predict_tree(const Tree& tree, const std::vector<double>& x) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const Node& n = tree.nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)].leaf_value;
}

// Predicts row r of a column-major dataset.
inline double predict_tree_row(const Tree& tree, const Dataset& d, int r) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const Node& n = tree.nodes[static_cast<std::size_t>(id)];
    const double v = d.columns[static_cast<std::size_t>(n.feature)][static_cast<std::size_t>(r)];
    id = v <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)].leaf_value;
}

}  // namespace pforest
