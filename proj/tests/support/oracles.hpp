#pragma once

// Test-side oracles, deliberately independent of the library code paths:
// long double arithmetic, direct textbook formulas, exhaustive enumeration.
// Row iteration is kept ascending by row id so that exact ties resolve the
// same way as the library's canonical accumulation order.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "pforest/dataset.hpp"

namespace oracle {

inline long double mean_ld(const pforest::Dataset& d, const std::vector<int>& rows) {
  long double s = 0.0L;
  for (int r : rows) s += static_cast<long double>(d.y[static_cast<std::size_t>(r)]);
  return s / static_cast<long double>(rows.size());
}

// Regression: total SSE about the mean. Classification: misclassification
// rate under majority vote.
inline long double node_cost_ld(const pforest::Dataset& d, const std::vector<int>& rows) {
  const auto n = static_cast<long double>(rows.size());
  if (d.task == pforest::Task::kRegression) {
    const long double m = mean_ld(d, rows);
    long double sse = 0.0L;
    for (int r : rows) {
      const long double dev = static_cast<long double>(d.y[static_cast<std::size_t>(r)]) - m;
      sse += dev * dev;
    }
    return sse;
  }
  std::vector<int> counts(static_cast<std::size_t>(d.n_classes()), 0);
  for (int r : rows) ++counts[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(r)])];
  const int majority = *std::max_element(counts.begin(), counts.end());
  return 1.0L - static_cast<long double>(majority) / n;
}

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  long double gain = 0.0L;
  long double rival = -1.0L;  // best gain among other (feature, threshold) candidates
};

// Same threshold rule as the library: midpoint of adjacent distinct values,
// nudged down to the left value if rounding lands on the right one.
inline double midpoint(double a, double b) {
  const double t = (a + b) / 2.0;
  return t < b ? t : a;
}

inline int majority_of(const pforest::Dataset& d, const std::vector<int>& rows) {
  std::vector<int> counts(static_cast<std::size_t>(d.n_classes()), 0);
  for (int r : rows) ++counts[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(r)])];
  return *std::max_element(counts.begin(), counts.end());
}

// Exhaustive enumeration of every (feature, threshold) candidate; strictly
// greater gain wins, so with features and thresholds ascending the tie-break
// is (lower feature, smaller threshold). `rows` must be sorted ascending.
// Classification gains use the exact integer identity
//   (majority_L + majority_R - majority_parent) / n,
// since the weighted misclassification form is too tie-prone to trust to
// floating-point rounding.
inline std::optional<BestSplit> best_split_ld(const pforest::Dataset& d,
                                              const std::vector<int>& rows,
                                              const std::vector<int>& features) {
  if (rows.size() < 2) return std::nullopt;
  const bool cls = d.task == pforest::Task::kClassification;
  const long double parent = cls ? 0.0L : node_cost_ld(d, rows);
  const int parent_majority = cls ? majority_of(d, rows) : 0;
  const auto n = static_cast<long double>(rows.size());
  std::optional<BestSplit> best;
  long double rival = -1.0L;
  std::vector<double> values;
  std::vector<int> left, right;
  for (int f : features) {
    const auto& col = d.columns[static_cast<std::size_t>(f)];
    values.clear();
    for (int r : rows) values.push_back(col[static_cast<std::size_t>(r)]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = midpoint(values[k], values[k + 1]);
      left.clear();
      right.clear();
      for (int r : rows) (col[static_cast<std::size_t>(r)] <= t ? left : right).push_back(r);
      long double gain;
      if (cls) {
        gain = static_cast<long double>(majority_of(d, left) + majority_of(d, right) -
                                        parent_majority) /
               n;
      } else {
        const long double wl = static_cast<long double>(left.size()) / n;
        const long double wr = static_cast<long double>(right.size()) / n;
        gain = parent - (wl * node_cost_ld(d, left) + wr * node_cost_ld(d, right));
        if (gain < 0.0L) gain = 0.0L;
      }
      if (!best || gain > best->gain) {
        if (best) rival = std::max(rival, best->gain);
        best = BestSplit{f, t, gain};
      } else {
        rival = std::max(rival, gain);
      }
    }
  }
  if (!best || !(best->gain > 0.0L)) return std::nullopt;
  best->rival = rival;
  return best;
}

struct OracleNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
};

struct OracleTree {
  std::vector<OracleNode> nodes;
  // Set when some node's winning regression gain is tied (or nearly so) with
  // a different (feature, threshold) — e.g. two features inducing the same
  // row partition. Exact arithmetic breaks such ties by enumeration order,
  // but a double-precision sweep ranks them by accumulated rounding, so
  // tree-equality comparisons should skip these. Classification gains are
  // exact integers and resolve ties identically everywhere.
  bool tie_ambiguous = false;
};

inline bool pure(const pforest::Dataset& d, const std::vector<int>& rows) {
  if (d.task == pforest::Task::kRegression) {
    const double first = d.y[static_cast<std::size_t>(rows.front())];
    for (int r : rows)
      if (d.y[static_cast<std::size_t>(r)] != first) return false;
    return true;
  }
  const int first = d.y_code[static_cast<std::size_t>(rows.front())];
  for (int r : rows)
    if (d.y_code[static_cast<std::size_t>(r)] != first) return false;
  return true;
}

inline double leaf_value_ld(const pforest::Dataset& d, const std::vector<int>& rows) {
  if (d.task == pforest::Task::kRegression) return static_cast<double>(mean_ld(d, rows));
  std::vector<int> counts(static_cast<std::size_t>(d.n_classes()), 0);
  for (int r : rows) ++counts[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(r)])];
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return static_cast<double>(best);
}

inline int grow_oracle_node(const pforest::Dataset& d, OracleTree& tree, std::vector<int> rows,
                            int depth, int min_node, int max_depth) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const bool stop = static_cast<int>(rows.size()) < 2 * min_node ||
                    (max_depth > 0 && depth >= max_depth) || pure(d, rows);
  std::optional<BestSplit> best;
  if (!stop) {
    std::vector<int> all(static_cast<std::size_t>(d.p()));
    for (int f = 0; f < d.p(); ++f) all[static_cast<std::size_t>(f)] = f;
    best = best_split_ld(d, rows, all);
    if (best && d.task == pforest::Task::kRegression && best->rival >= 0.0L &&
        best->gain - best->rival <= best->gain * 1e-9L)
      tree.tie_ambiguous = true;
  }
  if (!best) {
    tree.nodes[static_cast<std::size_t>(id)].leaf_value = leaf_value_ld(d, rows);
    return id;
  }
  const auto& col = d.columns[static_cast<std::size_t>(best->feature)];
  std::vector<int> left, right;
  for (int r : rows)
    (col[static_cast<std::size_t>(r)] <= best->threshold ? left : right).push_back(r);
  const int feature = best->feature;
  const double threshold = best->threshold;
  const int l = grow_oracle_node(d, tree, std::move(left), depth + 1, min_node, max_depth);
  const int r = grow_oracle_node(d, tree, std::move(right), depth + 1, min_node, max_depth);
  OracleNode& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = feature;
  node.threshold = threshold;
  node.left = l;
  node.right = r;
  return id;
}

// Unregularized recursive CART on all rows with every feature as a candidate
// (the mtry = p, bootstrap-off configuration).
inline OracleTree grow_oracle(const pforest::Dataset& d, int min_node, int max_depth) {
  OracleTree tree;
  std::vector<int> rows(static_cast<std::size_t>(d.n()));
  for (int r = 0; r < d.n(); ++r) rows[static_cast<std::size_t>(r)] = r;
  grow_oracle_node(d, tree, std::move(rows), 1, min_node, max_depth);
  return tree;
}

// Plug-in Shannon entropy (bits) by the direct sum, libm log.
inline long double entropy_ld(const std::vector<int>& counts, int n) {
  long double h = 0.0L;
  for (int c : counts) {
    if (c == 0) continue;
    const long double p = static_cast<long double>(c) / static_cast<long double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

// Plug-in mutual information (bits) by the direct double sum over the table.
inline long double mutual_information_ld(const std::vector<std::vector<int>>& joint, int n) {
  const std::size_t nx = joint.size();
  const std::size_t ny = nx == 0 ? 0 : joint[0].size();
  std::vector<long long> row(nx, 0), col(ny, 0);
  long double total = static_cast<long double>(n);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) {
      row[a] += joint[a][b];
      col[b] += joint[a][b];
    }
  long double mi = 0.0L;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) {
      if (joint[a][b] == 0) continue;
      const long double pab = static_cast<long double>(joint[a][b]) / total;
      const long double pa = static_cast<long double>(row[a]) / total;
      const long double pb = static_cast<long double>(col[b]) / total;
      mi += pab * std::log2(pab / (pa * pb));
    }
  return mi < 0.0L ? 0.0L : mi;
}

inline long double pearson_ld(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double sx = 0.0L, sy = 0.0L;
  for (double v : x) sx += v;
  for (double v : y) sy += v;
  const long double mx = sx / n, my = sy / n;
  long double sxx = 0.0L, syy = 0.0L, sxy = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double dx = static_cast<long double>(x[i]) - mx;
    const long double dy = static_cast<long double>(y[i]) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks, written independently of the library (stable sort of pairs).
inline std::vector<double> ranks_ld(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::pair<double, std::size_t>> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {x[i], i};
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1].first == v[i].first) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) r[v[k].second] = avg;
    i = j + 1;
  }
  return r;
}

// Kendall tau-b by explicit pair bookkeeping: tx / ty count pairs tied in x /
// in y (both-tied pairs counted in each).
inline long double kendall_ld(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long long c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool ex = x[i] == x[j], ey = y[i] == y[j];
      if (ex) ++tx;
      if (ey) ++ty;
      if (ex || ey) continue;
      if ((x[i] < x[j]) == (y[i] < y[j]))
        ++c;
      else
        ++d;
    }
  const long double n0 = static_cast<long double>(n) * (static_cast<long double>(n) - 1.0L) / 2.0L;
  return (static_cast<long double>(c) - static_cast<long double>(d)) /
         std::sqrt((n0 - static_cast<long double>(tx)) * (n0 - static_cast<long double>(ty)));
}

}  // namespace oracle
