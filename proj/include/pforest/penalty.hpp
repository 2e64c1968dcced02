#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pforest/dataset.hpp"
#include "pforest/forest.hpp"
#include "pforest/numeric.hpp"
#include "pforest/prng.hpp"

namespace pforest {

enum class CorrelationKind { kPearson, kSpearman, kKendall };
enum class GKind {
  kConstant,
  kCorrelation,
  kEntropy,
  kMutualInformation,
  kBoostedRf,        // guide forest trained internally
  kBoostedExternal,  // importances supplied by the caller
  kCombined,         // |corr| above epsilon, boosted fallback below
};

inline constexpr double kLambdaFloor = 1e-6;

// lambda_i = (1 - gamma) * lambda0 + gamma * g(x_i), clamped to
// [kLambdaFloor, 1]. gamma = 0 reduces to a constant-lambda forest; the
// boosted sources reproduce the guided variant.
struct PenaltySpec {
  double lambda0 = 1.0;
  double gamma = 0.0;
  GKind g = GKind::kConstant;
  CorrelationKind correlation = CorrelationKind::kPearson;
  int bins = 10;           // discretization for entropy / mutual information
  double epsilon = 0.5;    // combined-source correlation threshold
  bool depth_penalty = false;
  int guide_ntree = 500;   // guide forest for the boosted source
  std::uint64_t guide_seed = 0;
};

inline double mix_lambda(double lambda0, double gamma, double g) {
  return (1.0 - gamma) * lambda0 + gamma * g;
}

inline double clamp_lambda(double v) { return std::clamp(v, kLambdaFloor, 1.0); }

inline void validate_penalty(const PenaltySpec& spec) {
  if (!(spec.lambda0 >= 0.0) || spec.lambda0 > 1.0)
    throw ConfigError("penalty: lambda0 must lie in [0, 1]");
  if (!(spec.gamma >= 0.0) || spec.gamma > 1.0)
    throw ConfigError("penalty: gamma must lie in [0, 1]");
  if (spec.bins < 2) throw ConfigError("penalty: bins must be >= 2");
  if (!(spec.epsilon > 0.0) || !(spec.epsilon < 1.0))
    throw ConfigError("penalty: epsilon must lie in (0, 1)");
  if (spec.guide_ntree < 1) throw ConfigError("penalty: guide_ntree must be >= 1");
}

namespace detail {

inline double pearson(const std::vector<double>& x, const std::vector<double>& y,
                      const std::string& what) {
  const auto n = static_cast<double>(x.size());
  StableSum sx, sy;
  for (double v : x) sx.add(v);
  for (double v : y) sy.add(v);
  const double mx = sx.value() / n, my = sy.value() / n;
  StableSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  if (!(sxx.value() > 0.0)) throw DataError("g_correlation: zero-variance " + what);
  if (!(syy.value() > 0.0)) throw DataError("g_correlation: zero-variance target");
  return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

// Average ranks, ties sharing the mean of their positions.
inline std::vector<double> ranks_of(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)];
  });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[static_cast<std::size_t>(order[j + 1])] ==
                            x[static_cast<std::size_t>(order[i])])
      ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[static_cast<std::size_t>(order[k])] = avg;
    i = j + 1;
  }
  return r;
}

// Kendall tau-b (tie-corrected), O(n^2) pair scan.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y,
                          const std::string& what) {
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  const double dx_pairs = n0 - static_cast<double>(ties_y) - static_cast<double>(concordant) -
                          static_cast<double>(discordant);
  const double dy_pairs = n0 - static_cast<double>(ties_x) - static_cast<double>(concordant) -
                          static_cast<double>(discordant);
  // dx_pairs / dy_pairs count pairs tied in x / in y (including both-tied).
  const double denom_x = n0 - dx_pairs;
  const double denom_y = n0 - dy_pairs;
  if (!(denom_x > 0.0)) throw DataError("g_correlation: zero-variance " + what);
  if (!(denom_y > 0.0)) throw DataError("g_correlation: zero-variance target");
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) /
         std::sqrt(denom_x * denom_y);
}

// Equal-frequency state codes. A feature with at most `bins` distinct values
// keeps those values as its states; otherwise cutpoints sit at the
// floor(k*n/bins)-th order statistics and code(x) counts cutpoints <= x.
inline std::vector<int> discretize_equal_frequency(const std::vector<double>& values, int bins) {
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct(sorted);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<int> codes(values.size());
  if (static_cast<int>(distinct.size()) <= bins) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto it = std::lower_bound(distinct.begin(), distinct.end(), values[i]);
      codes[i] = static_cast<int>(it - distinct.begin());
    }
    return codes;
  }
  const std::size_t n = values.size();
  std::vector<double> cuts;
  for (int k = 1; k < bins; ++k)
    cuts.push_back(sorted[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins)]);
  for (std::size_t i = 0; i < values.size(); ++i)
    codes[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) -
                                cuts.begin());
  return codes;
}

// Plug-in Shannon entropy, base 2, over state counts; 0 log 0 := 0.
inline double entropy_bits(const std::vector<int>& counts, int n) {
  StableSum h;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h.add(-p * portable_log2(p));
  }
  return h.value();
}

// Plug-in mutual information (bits) from a dense joint count table.
inline double mutual_information_bits(const std::vector<std::vector<int>>& joint, int n) {
  const std::size_t nx = joint.size();
  const std::size_t ny = nx == 0 ? 0 : joint[0].size();
  std::vector<int> row(nx, 0), col(ny, 0);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) {
      row[a] += joint[a][b];
      col[b] += joint[a][b];
    }
  StableSum mi;
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t b = 0; b < ny; ++b) {
      const int c = joint[a][b];
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(n);
      const double ratio = static_cast<double>(c) * static_cast<double>(n) /
                           (static_cast<double>(row[a]) * static_cast<double>(col[b]));
      mi.add(p * portable_log2(ratio));
    }
  }
  return std::max(0.0, mi.value());
}

inline std::vector<int> target_states(const Dataset& d, int bins) {
  if (d.task == Task::kClassification) return d.y_code;
  return discretize_equal_frequency(d.y, bins);
}

}  // namespace detail

inline std::vector<double> g_constant(int p) {
  return std::vector<double>(static_cast<std::size_t>(p), 1.0);
}

// |corr(y, x_i)| under the chosen coefficient. Regression targets only.
inline std::vector<double> g_correlation(const Dataset& d, CorrelationKind kind) {
  if (d.task != Task::kRegression)
    throw ConfigError("g_correlation: requires a regression target");
  std::vector<double> g(static_cast<std::size_t>(d.p()));
  std::vector<double> y_ranks;
  if (kind == CorrelationKind::kSpearman) y_ranks = detail::ranks_of(d.y);
  for (int i = 0; i < d.p(); ++i) {
    const auto& col = d.columns[static_cast<std::size_t>(i)];
    const std::string what = "feature '" + d.feature_names[static_cast<std::size_t>(i)] + "'";
    double r = 0.0;
    switch (kind) {
      case CorrelationKind::kPearson:
        r = detail::pearson(col, d.y, what);
        break;
      case CorrelationKind::kSpearman:
        r = detail::pearson(detail::ranks_of(col), y_ranks, what);
        break;
      case CorrelationKind::kKendall:
        r = detail::kendall_tau(col, d.y, what);
        break;
    }
    g[static_cast<std::size_t>(i)] = std::min(1.0, std::abs(r));
  }
  return g;
}

// g = 1 - H(x_i)/max_j H(x_j); the max-entropy feature gets g = 0.
inline std::vector<double> g_entropy(const Dataset& d, int bins) {
  const int n = d.n();
  std::vector<double> h(static_cast<std::size_t>(d.p()));
  for (int i = 0; i < d.p(); ++i) {
    const auto codes =
        detail::discretize_equal_frequency(d.columns[static_cast<std::size_t>(i)], bins);
    const int states = *std::max_element(codes.begin(), codes.end()) + 1;
    std::vector<int> counts(static_cast<std::size_t>(states), 0);
    for (int c : codes) ++counts[static_cast<std::size_t>(c)];
    h[static_cast<std::size_t>(i)] = detail::entropy_bits(counts, n);
  }
  const double h_max = *std::max_element(h.begin(), h.end());
  if (!(h_max > 0.0)) throw DataError("g_entropy: all features constant");
  std::vector<double> g(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) g[i] = 1.0 - h[i] / h_max;
  return g;
}

// g = MI(x_i, y) / max_j MI(x_j, y); continuous columns (and a regression
// target) are discretized with the same equal-frequency rule.
inline std::vector<double> g_mutual_information(const Dataset& d, int bins) {
  const int n = d.n();
  const auto y_states = detail::target_states(d, bins);
  const int ny = *std::max_element(y_states.begin(), y_states.end()) + 1;
  std::vector<double> mi(static_cast<std::size_t>(d.p()));
  for (int i = 0; i < d.p(); ++i) {
    const auto codes =
        detail::discretize_equal_frequency(d.columns[static_cast<std::size_t>(i)], bins);
    const int nx = *std::max_element(codes.begin(), codes.end()) + 1;
    std::vector<std::vector<int>> joint(static_cast<std::size_t>(nx),
                                        std::vector<int>(static_cast<std::size_t>(ny), 0));
    for (int r = 0; r < n; ++r)
      ++joint[static_cast<std::size_t>(codes[static_cast<std::size_t>(r)])]
             [static_cast<std::size_t>(y_states[static_cast<std::size_t>(r)])];
    mi[static_cast<std::size_t>(i)] = detail::mutual_information_bits(joint, n);
  }
  const double mi_max = *std::max_element(mi.begin(), mi.end());
  if (!(mi_max > 0.0))
    throw DataError("g_mutual_information: every feature has zero mutual information");
  std::vector<double> g(mi.size());
  for (std::size_t i = 0; i < mi.size(); ++i) g[i] = mi[i] / mi_max;
  return g;
}

// Importances scaled by their maximum.
inline std::vector<double> g_boosted(const std::vector<double>& importances) {
  if (importances.empty()) throw DataError("g_boosted: empty importance vector");
  double max = 0.0;
  for (double v : importances) {
    if (v < 0.0) throw DataError("g_boosted: negative importance");
    max = std::max(max, v);
  }
  if (!(max > 0.0)) throw DataError("g_boosted: all importances are zero");
  std::vector<double> g(importances.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = importances[i] / max;
  return g;
}

inline std::vector<double> g_combined(const Dataset& d, double epsilon,
                                      const std::vector<double>& fallback_importances,
                                      CorrelationKind kind) {
  const auto corr = g_correlation(d, kind);
  const auto fallback = g_boosted(fallback_importances);
  if (fallback.size() != corr.size())
    throw ConfigError("g_combined: fallback importance length must equal p");
  std::vector<double> g(corr.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = corr[i] > epsilon ? corr[i] : fallback[i];
  return g;
}

// Plain random forest trained only to harvest importances (mtry = floor(sqrt p)).
inline std::vector<double> guide_importances(const Dataset& d, int ntree, std::uint64_t seed) {
  ForestConfig cfg;
  cfg.ntree = ntree;
  cfg.master_seed = seed;
  cfg.grow.mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d.p()))));
  const Forest guide = train_forest(d, cfg, nullptr);
  return forest_importance(guide);
}

// `importances` feeds the boosted and combined sources: required for
// boosted-external, optional otherwise (boosted-rf and combined train a guide
// forest themselves when none are given).
inline std::vector<double> compute_g(const PenaltySpec& spec, const Dataset& d,
                                     const std::vector<double>* importances = nullptr) {
  switch (spec.g) {
    case GKind::kConstant:
      return g_constant(d.p());
    case GKind::kCorrelation:
      return g_correlation(d, spec.correlation);
    case GKind::kEntropy:
      return g_entropy(d, spec.bins);
    case GKind::kMutualInformation:
      return g_mutual_information(d, spec.bins);
    case GKind::kBoostedRf: {
      if (importances != nullptr) return g_boosted(*importances);
      return g_boosted(guide_importances(d, spec.guide_ntree, spec.guide_seed));
    }
    case GKind::kBoostedExternal: {
      if (importances == nullptr)
        throw ConfigError("compute_g: boosted-external requires an importance vector");
      if (static_cast<int>(importances->size()) != d.p())
        throw ConfigError("compute_g: importance length must equal p");
      return g_boosted(*importances);
    }
    case GKind::kCombined: {
      std::vector<double> fallback;
      if (importances != nullptr) {
        if (static_cast<int>(importances->size()) != d.p())
          throw ConfigError("compute_g: importance length must equal p");
        fallback = *importances;
      } else {
        fallback = guide_importances(d, spec.guide_ntree, spec.guide_seed);
      }
      return g_combined(d, spec.epsilon, fallback, spec.correlation);
    }
  }
  throw ConfigError("compute_g: unknown g source");
}

inline std::vector<double> compute_lambdas(const PenaltySpec& spec, const Dataset& d,
                                           const std::vector<double>* importances = nullptr) {
  validate_penalty(spec);
  const auto g = compute_g(spec, d, importances);
  std::vector<double> lambdas(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    lambdas[i] = clamp_lambda(mix_lambda(spec.lambda0, spec.gamma, g[i]));
  return lambdas;
}

// Two-column importance CSV: header `feature,importance`, every dataset
// feature present exactly once.
inline std::vector<double> read_importance_file(const std::string& path,
                                                const std::vector<std::string>& feature_names) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw DataError("importance file " + path + ": empty file");
  if (rows[0].size() != 2 || rows[0][0] != "feature" || rows[0][1] != "importance")
    throw DataError("importance file " + path + ": header must be 'feature,importance'");
  std::vector<double> imp(feature_names.size(), 0.0);
  std::vector<bool> seen(feature_names.size(), false);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      throw DataError("importance file " + path + ": row " + std::to_string(i) +
                      ": expected 2 fields");
    const auto it = std::find(feature_names.begin(), feature_names.end(), rows[i][0]);
    if (it == feature_names.end())
      throw DataError("importance file " + path + ": unknown feature '" + rows[i][0] + "'");
    const auto idx = static_cast<std::size_t>(it - feature_names.begin());
    if (seen[idx])
      throw DataError("importance file " + path + ": duplicate feature '" + rows[i][0] + "'");
    double v = 0.0;
    if (!parse_double(rows[i][1], v) || !std::isfinite(v) || v < 0.0)
      throw DataError("importance file " + path + ": row " + std::to_string(i) +
                      ": importance must be a non-negative number");
    imp[idx] = v;
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw DataError("importance file " + path + ": missing feature '" + feature_names[i] + "'");
  return imp;
}

}  // namespace pforest
