#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pforest/numeric.hpp"
#include "pforest/simulate.hpp"

namespace pforest {

inline double rmse(const std::vector<double>& predictions, const std::vector<double>& truth) {
  if (predictions.size() != truth.size() || predictions.empty())
    throw ConfigError("rmse: prediction/truth length mismatch");
  StableSum sum;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truth[i];
    sum.add(e * e);
  }
  return std::sqrt(sum.value() / static_cast<double>(predictions.size()));
}

inline double misclassification_rate(const std::vector<double>& predictions,
                                     const std::vector<double>& truth) {
  if (predictions.size() != truth.size() || predictions.empty())
    throw ConfigError("misclassification_rate: prediction/truth length mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] != truth[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

// pct_correlated = |selected ∩ correlated| / |correlated|;
// pct_important = |selected ∩ important| / (|selected| - |selected ∩ correlated|),
// 0/0 treated as 0. `selected` must be sorted ascending (0-based).
inline std::pair<double, double> table2_metrics(const std::vector<int>& selected,
                                                const GroundTruth& truth) {
  auto overlap = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out.size();
  };
  const auto n_corr = overlap(selected, truth.correlated);
  const auto n_imp = overlap(selected, truth.important);
  const double pct_correlated =
      truth.correlated.empty()
          ? 0.0
          : static_cast<double>(n_corr) / static_cast<double>(truth.correlated.size());
  const std::size_t denom = selected.size() - n_corr;
  const double pct_important =
      denom == 0 ? 0.0 : static_cast<double>(n_imp) / static_cast<double>(denom);
  return {pct_important, pct_correlated};
}

}  // namespace pforest
