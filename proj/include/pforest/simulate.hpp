#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pforest/dataset.hpp"
#include "pforest/numeric.hpp"
#include "pforest/prng.hpp"

namespace pforest {

// Synthetic regression data: 205 iid Uniform[0,1] features, 45 features
// correlated with x5, and
//   y = 0.8 sin(x1 x2) + 2 (x3 - 0.5)^2 + x4 + 0.7 x5
//       + sum_{j=1..200} 0.9^(j/3) x_{j+5} + sum_{j=1..45} 0.9^j x5 + eps.
struct SimSpec {
  int n = 1000;
  std::uint64_t seed = 0;
  double noise_sd = 1.0;
  double correlated_noise_sd = 0.25;  // x_{205+j} = clamp(x5 + N(0, sd^2), 0, 1)
};

// 0-based feature indices; user-facing artifacts print them 1-based.
struct GroundTruth {
  std::vector<int> important;   // {x1..x5} plus every x_{j+5} with 0.9^(j/3) > 0.01
  std::vector<int> correlated;  // the 45 x5-derived columns
};

inline constexpr int kSimFeatures = 250;
inline constexpr int kSimUniform = 205;
inline constexpr int kSimCorrelated = 45;
// cbrt(0.9), frozen so the geometric weights are bit-stable everywhere.
inline constexpr double kCubeRootNine = 0x1.ee549fe7085e7p-1;

inline std::vector<int> important_set() {
  std::vector<int> v;
  for (int i = 0; i < 136; ++i) v.push_back(i);  // 0.9^(j/3) > 0.01 iff j <= 131
  return v;
}

inline std::vector<int> correlated_set() {
  std::vector<int> c;
  for (int i = kSimUniform; i < kSimFeatures; ++i) c.push_back(i);
  return c;
}

// Noise-free response for one row of 250 features.
inline double sim_signal(const std::vector<double>& x) {
  double s = 0.8 * portable_sin_01(x[0] * x[1]);
  s += 2.0 * (x[2] - 0.5) * (x[2] - 0.5);
  s += x[3];
  s += 0.7 * x[4];
  double w = 1.0;
  for (int j = 1; j <= 200; ++j) {
    w *= kCubeRootNine;
    s += w * x[static_cast<std::size_t>(4 + j)];
  }
  double w5 = 1.0;
  for (int j = 1; j <= kSimCorrelated; ++j) {
    w5 *= 0.9;
    s += w5 * x[4];
  }
  return s;
}

// Deterministic per seed. Draw order per row: 205 uniforms, then one normal
// per correlated column, then the noise normal.
inline std::pair<Dataset, GroundTruth> simulate(const SimSpec& spec) {
  if (spec.n < 1) throw ConfigError("simulate: n must be >= 1");
  if (spec.noise_sd < 0.0 || spec.correlated_noise_sd < 0.0)
    throw ConfigError("simulate: standard deviations must be >= 0");

  Dataset d;
  d.task = Task::kRegression;
  for (int i = 1; i <= kSimFeatures; ++i) d.feature_names.push_back("x" + std::to_string(i));
  d.columns.assign(kSimFeatures, {});
  for (auto& col : d.columns) col.reserve(static_cast<std::size_t>(spec.n));
  d.y.reserve(static_cast<std::size_t>(spec.n));

  Rng rng(spec.seed);
  std::vector<double> x(kSimFeatures);
  for (int r = 0; r < spec.n; ++r) {
    for (int i = 0; i < kSimUniform; ++i) x[static_cast<std::size_t>(i)] = rng.next_double();
    for (int j = 0; j < kSimCorrelated; ++j) {
      const double eta = rng.next_normal() * spec.correlated_noise_sd;
      x[static_cast<std::size_t>(kSimUniform + j)] = std::clamp(x[4] + eta, 0.0, 1.0);
    }
    const double eps = rng.next_normal() * spec.noise_sd;
    for (int i = 0; i < kSimFeatures; ++i)
      d.columns[static_cast<std::size_t>(i)].push_back(x[static_cast<std::size_t>(i)]);
    d.y.push_back(sim_signal(x) + eps);
  }
  d.validate();
  return {std::move(d), GroundTruth{important_set(), correlated_set()}};
}

inline constexpr const char* kTruthFormat = "pforest-truth/1";

// Sidecar listing the two ground-truth index sets, 1-based to match the
// x1..x250 column names.
inline void write_truth_sidecar(const GroundTruth& truth, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = kTruthFormat;
  nlohmann::ordered_json imp = nlohmann::ordered_json::array();
  for (int i : truth.important) imp.push_back(i + 1);
  nlohmann::ordered_json corr = nlohmann::ordered_json::array();
  for (int i : truth.correlated) corr.push_back(i + 1);
  j["important"] = std::move(imp);
  j["correlated"] = std::move(corr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline GroundTruth read_truth_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("truth sidecar " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("format") || j["format"] != kTruthFormat)
    throw DataError("truth sidecar " + path + ": missing or unknown format marker");
  GroundTruth truth;
  for (const auto& v : j.at("important")) truth.important.push_back(v.get<int>() - 1);
  for (const auto& v : j.at("correlated")) truth.correlated.push_back(v.get<int>() - 1);
  for (int i : truth.important)
    if (i < 0) throw DataError("truth sidecar " + path + ": indices must be >= 1");
  for (int i : truth.correlated)
    if (i < 0) throw DataError("truth sidecar " + path + ": indices must be >= 1");
  return truth;
}

}  // namespace pforest
