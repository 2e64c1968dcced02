#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pforest/csv.hpp"
#include "pforest/numeric.hpp"
#include "pforest/prng.hpp"

namespace pforest {

enum class Task { kRegression, kClassification };

inline std::string task_name(Task t) {
  return t == Task::kRegression ? "regression" : "classification";
}

inline Task task_from_name(const std::string& s) {
  if (s == "regression") return Task::kRegression;
  if (s == "classification") return Task::kClassification;
  throw ConfigError("unknown task '" + s + "' (expected regression or classification)");
}

// Column-oriented numeric feature matrix with a named target. Immutable after
// construction; share freely across readers.
struct Dataset {
  Task task = Task::kRegression;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> columns;  // p columns, each of length n
  std::vector<double> y;                     // regression target
  std::vector<int> y_code;                   // classification codes
  std::vector<std::string> class_labels;     // code -> label

  int p() const { return static_cast<int>(columns.size()); }
  int n() const {
    return task == Task::kRegression ? static_cast<int>(y.size())
                                     : static_cast<int>(y_code.size());
  }
  int n_classes() const { return static_cast<int>(class_labels.size()); }

  void validate() const {
    const std::size_t rows = task == Task::kRegression ? y.size() : y_code.size();
    if (rows == 0) throw DataError("dataset has no rows");
    if (columns.size() != feature_names.size())
      throw DataError("dataset: column/name count mismatch");
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != rows)
        throw DataError("dataset: column '" + feature_names[j] + "' has wrong length");
    }
    std::set<std::string> names(feature_names.begin(), feature_names.end());
    if (names.size() != feature_names.size())
      throw DataError("dataset: duplicate feature names");
    if (task == Task::kClassification) {
      if (class_labels.size() < 2)
        throw DataError("classification target needs at least 2 distinct classes");
      for (int code : y_code) {
        if (code < 0 || code >= n_classes())
          throw DataError("dataset: class code out of range");
      }
    }
  }
};

// Disjoint train/test row partition.
struct SplitPlan {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::uint64_t seed = 0;
};

inline Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.task = d.task;
  out.feature_names = d.feature_names;
  out.class_labels = d.class_labels;
  out.columns.resize(d.columns.size());
  for (std::size_t j = 0; j < d.columns.size(); ++j) {
    out.columns[j].reserve(rows.size());
    for (int r : rows) out.columns[j].push_back(d.columns[j][static_cast<std::size_t>(r)]);
  }
  if (d.task == Task::kRegression) {
    out.y.reserve(rows.size());
    for (int r : rows) out.y.push_back(d.y[static_cast<std::size_t>(r)]);
  } else {
    out.y_code.reserve(rows.size());
    for (int r : rows) out.y_code.push_back(d.y_code[static_cast<std::size_t>(r)]);
  }
  return out;
}

// Keep only the given feature columns (sorted ascending), e.g. after selection.
inline Dataset subset_features(const Dataset& d, const std::vector<int>& features) {
  Dataset out;
  out.task = d.task;
  out.class_labels = d.class_labels;
  out.y = d.y;
  out.y_code = d.y_code;
  for (int j : features) {
    out.feature_names.push_back(d.feature_names[static_cast<std::size_t>(j)]);
    out.columns.push_back(d.columns[static_cast<std::size_t>(j)]);
  }
  return out;
}

// Loads a header-ed CSV. Features are every non-target column, in header
// order; classification labels are coded by first appearance. Errors name the
// 1-based data row and the column.
inline Dataset load_csv(const std::string& path, const std::string& target_name, Task task) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw DataError("load_csv: " + path + ": empty file");
  const auto& header = rows[0];

  std::set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second)
      throw DataError("load_csv: " + path + ": duplicate header name '" + name + "'");
  }
  int target_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == target_name) target_col = static_cast<int>(j);
  }
  if (target_col < 0)
    throw DataError("load_csv: " + path + ": missing target column '" + target_name + "'");
  if (rows.size() < 2) throw DataError("load_csv: " + path + ": no data rows");

  Dataset d;
  d.task = task;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) != target_col) d.feature_names.push_back(header[j]);
  }
  d.columns.resize(d.feature_names.size());
  const std::size_t n_rows = rows.size() - 1;
  for (auto& col : d.columns) col.reserve(n_rows);

  std::unordered_map<std::string, int> label_codes;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string rowloc = "row " + std::to_string(i);
    if (row.size() != header.size())
      throw DataError("load_csv: " + path + ": " + rowloc + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    int feat = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (static_cast<int>(j) == target_col) continue;
      double v = 0.0;
      if (!parse_double(row[j], v) || !std::isfinite(v))
        throw DataError("load_csv: " + path + ": " + rowloc + ", column '" + header[j] +
                        "': non-numeric value '" + row[j] + "'");
      d.columns[static_cast<std::size_t>(feat)].push_back(v);
      ++feat;
    }
    const std::string& target_cell = row[static_cast<std::size_t>(target_col)];
    if (task == Task::kRegression) {
      double v = 0.0;
      if (!parse_double(target_cell, v) || !std::isfinite(v))
        throw DataError("load_csv: " + path + ": " + rowloc + ", column '" + target_name +
                        "': non-numeric value '" + target_cell + "'");
      d.y.push_back(v);
    } else {
      auto it = label_codes.find(target_cell);
      if (it == label_codes.end()) {
        it = label_codes.emplace(target_cell, static_cast<int>(d.class_labels.size())).first;
        d.class_labels.push_back(target_cell);
      }
      d.y_code.push_back(it->second);
    }
  }
  d.validate();
  return d;
}

// Target-less view of a CSV for prediction: every column kept, numeric only.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  int n() const { return columns.empty() ? 0 : static_cast<int>(columns[0].size()); }

  // Column lookup by name; -1 when absent.
  int find(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<int>(j);
    return -1;
  }
};

// Loads all columns of a header-ed CSV as numbers. `skip` columns (e.g. a
// target that happens to be present) are dropped without parsing.
inline FeatureMatrix load_matrix_csv(const std::string& path,
                                     const std::vector<std::string>& skip = {}) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw DataError("load_matrix_csv: " + path + ": empty file");
  if (rows.size() < 2) throw DataError("load_matrix_csv: " + path + ": no data rows");
  const auto& header = rows[0];

  std::set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second)
      throw DataError("load_matrix_csv: " + path + ": duplicate header name '" + name + "'");
  }
  std::vector<bool> keep(header.size(), true);
  FeatureMatrix m;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (std::find(skip.begin(), skip.end(), header[j]) != skip.end())
      keep[j] = false;
    else
      m.names.push_back(header[j]);
  }
  m.columns.resize(m.names.size());
  for (auto& col : m.columns) col.reserve(rows.size() - 1);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string rowloc = "row " + std::to_string(i);
    if (row.size() != header.size())
      throw DataError("load_matrix_csv: " + path + ": " + rowloc + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    int out_col = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!keep[j]) continue;
      double v = 0.0;
      if (!parse_double(row[j], v) || !std::isfinite(v))
        throw DataError("load_matrix_csv: " + path + ": " + rowloc + ", column '" + header[j] +
                        "': non-numeric value '" + row[j] + "'");
      m.columns[static_cast<std::size_t>(out_col)].push_back(v);
      ++out_col;
    }
  }
  return m;
}

inline void save_csv(const Dataset& d, const std::string& path,
                     const std::string& target_name = "y") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  std::vector<std::string> row = d.feature_names;
  row.push_back(target_name);
  csv::write_row(out, row);
  const int n = d.n();
  for (int i = 0; i < n; ++i) {
    row.clear();
    for (const auto& col : d.columns) row.push_back(format_double(col[static_cast<std::size_t>(i)]));
    if (d.task == Task::kRegression) {
      row.push_back(format_double(d.y[static_cast<std::size_t>(i)]));
    } else {
      row.push_back(d.class_labels[static_cast<std::size_t>(d.y_code[static_cast<std::size_t>(i)])]);
    }
    csv::write_row(out, row);
  }
  if (!out) throw DataError("write failed: " + path);
}

// Seeded random row partition; |train| = round(fraction * n). Both index
// lists come back sorted.
inline SplitPlan split_train_test(const Dataset& d, double train_fraction, std::uint64_t seed) {
  const int n = d.n();
  if (n < 2) throw DataError("split_train_test: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split_train_test: train_fraction must be in (0,1)");
  const int n_train = static_cast<int>(std::llround(train_fraction * n));
  if (n_train < 1 || n_train >= n)
    throw ConfigError("split_train_test: fraction leaves an empty side");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  SplitPlan plan;
  plan.seed = seed;
  plan.train_indices.assign(order.begin(), order.begin() + n_train);
  plan.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

struct Standardization {
  Dataset train;
  Dataset test;
  double mean = 0.0;
  double sd = 1.0;
};

// Centers/scales the regression target by the training mean and sample sd;
// the same transform is applied to the test set.
inline Standardization standardize_target(const Dataset& train, const Dataset& test) {
  if (train.task != Task::kRegression || test.task != Task::kRegression)
    throw ConfigError("standardize_target: regression targets only");
  if (train.n() < 2) throw DataError("standardize_target: need at least 2 training rows");
  Standardization out;
  out.mean = mean_of(train.y);
  out.sd = sample_sd(train.y);
  if (!(out.sd > 0.0)) throw DataError("standardize_target: zero-variance training target");
  out.train = train;
  out.test = test;
  for (double& v : out.train.y) v = (v - out.mean) / out.sd;
  for (double& v : out.test.y) v = (v - out.mean) / out.sd;
  return out;
}

}  // namespace pforest
