#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pforest/dataset.hpp"
#include "pforest/numeric.hpp"
#include "pforest/prng.hpp"
#include "pforest/tree.hpp"

namespace pforest {

struct ForestConfig {
  int ntree = 100;
  GrowConfig grow;
  bool bootstrap = true;  // n draws with replacement per tree
  std::uint64_t master_seed = 0;
};

struct Forest {
  Task task = Task::kRegression;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_labels;  // empty for regression
  ForestConfig config;
  std::vector<double> lambdas;          // all 1.0 when trained unpenalized
  std::vector<std::uint8_t> used_set;   // ensemble memory, one flag per feature
  std::vector<Tree> trees;

  int p() const { return static_cast<int>(feature_names.size()); }
};

// Trees are grown in index order, each from its own sub-stream
// (child_seed(master_seed, t): bootstrap draws first, then candidate draws),
// all sharing one used-feature set that persists across trees. Passing
// lambdas == nullptr turns the penalization code path off entirely; the
// resulting model is identical to training with every lambda equal to 1.
// `presorted` lets callers training many forests on one dataset share the
// per-feature sort.
inline Forest train_forest(const Dataset& d, const ForestConfig& cfg,
                           const std::vector<double>* lambdas,
                           const SortedColumns* presorted = nullptr) {
  d.validate();
  if (d.n() < 1) throw DataError("train_forest: empty training data");
  if (cfg.ntree < 1) throw ConfigError("train_forest: ntree must be >= 1");
  if (cfg.grow.mtry < 0 || cfg.grow.mtry > d.p())
    throw ConfigError("train_forest: mtry must be in [1, p] (0 = all)");
  if (cfg.grow.min_node_size < 0) throw ConfigError("train_forest: min_node_size must be >= 1");
  if (lambdas != nullptr) {
    if (static_cast<int>(lambdas->size()) != d.p())
      throw ConfigError("train_forest: lambdas length must equal p");
    for (double l : (*lambdas))
      if (!(l > 0.0) || l > 1.0)
        throw ConfigError("train_forest: every lambda must lie in (0, 1]");
  }

  Forest f;
  f.task = d.task;
  f.feature_names = d.feature_names;
  f.class_labels = d.class_labels;
  f.config = cfg;
  f.lambdas = lambdas != nullptr ? *lambdas
                                 : std::vector<double>(static_cast<std::size_t>(d.p()), 1.0);
  f.used_set.assign(static_cast<std::size_t>(d.p()), 0);
  f.trees.reserve(static_cast<std::size_t>(cfg.ntree));

  SortedColumns local;
  if (presorted == nullptr) {
    local = SortedColumns::build(d);
    presorted = &local;
  }

  const int n = d.n();
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int t = 0; t < cfg.ntree; ++t) {
    Rng rng(child_seed(cfg.master_seed, t));
    if (cfg.bootstrap) {
      for (int i = 0; i < n; ++i)
        rows[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    } else {
      for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    }
    f.trees.push_back(grow_tree(d, rows, cfg.grow, lambdas, &f.used_set, rng, presorted));
  }
  return f;
}

namespace detail {

inline double predict_row(const Forest& f, const std::vector<std::vector<double>>& columns,
                          int r) {
  if (f.task == Task::kRegression) {
    StableSum sum;
    for (const Tree& t : f.trees) {
      int id = 0;
      while (t.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const Node& nd = t.nodes[static_cast<std::size_t>(id)];
        const double v =
            columns[static_cast<std::size_t>(nd.feature)][static_cast<std::size_t>(r)];
        id = v <= nd.threshold ? nd.left : nd.right;
      }
      sum.add(t.nodes[static_cast<std::size_t>(id)].leaf_value);
    }
    return sum.value() / static_cast<double>(f.trees.size());
  }
  std::vector<int> votes(f.class_labels.size(), 0);
  for (const Tree& t : f.trees) {
    int id = 0;
    while (t.nodes[static_cast<std::size_t>(id)].feature >= 0) {
      const Node& nd = t.nodes[static_cast<std::size_t>(id)];
      const double v = columns[static_cast<std::size_t>(nd.feature)][static_cast<std::size_t>(r)];
      id = v <= nd.threshold ? nd.left : nd.right;
    }
    ++votes[static_cast<std::size_t>(t.nodes[static_cast<std::size_t>(id)].leaf_value)];
  }
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return static_cast<double>(best);  // vote ties fall to the lower code
}

}  // namespace detail

// columns must already be in the model's feature order. Returns mean tree
// prediction (regression) or majority-vote class codes (classification).
inline std::vector<double> predict_forest(const Forest& f,
                                          const std::vector<std::vector<double>>& columns) {
  if (static_cast<int>(columns.size()) != f.p())
    throw DataError("predict_forest: expected " + std::to_string(f.p()) + " feature columns, got " +
                    std::to_string(columns.size()));
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  for (const auto& col : columns)
    if (col.size() != n) throw DataError("predict_forest: ragged feature columns");
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r)
    out[r] = detail::predict_row(f, columns, static_cast<int>(r));
  return out;
}

inline std::vector<double> predict_forest(const Forest& f, const Dataset& d) {
  if (d.feature_names != f.feature_names)
    throw DataError("predict_forest: dataset features do not match the model");
  return predict_forest(f, d.columns);
}

// Aligns arbitrary named columns (extra columns allowed, any order) to the
// model's feature order, then predicts.
inline std::vector<double> predict_forest(const Forest& f, const FeatureMatrix& m) {
  std::vector<std::vector<double>> columns;
  columns.reserve(f.feature_names.size());
  for (const auto& name : f.feature_names) {
    const int j = m.find(name);
    if (j < 0) throw DataError("predict_forest: input is missing feature '" + name + "'");
    columns.push_back(m.columns[static_cast<std::size_t>(j)]);
  }
  return predict_forest(f, columns);
}

// Per-feature mean of tree gain totals across all trees, zeros included.
inline std::vector<double> forest_importance(const Forest& f) {
  std::vector<double> imp(static_cast<std::size_t>(f.p()), 0.0);
  StableSum sum;
  for (std::size_t i = 0; i < imp.size(); ++i) {
    sum.reset();
    for (const Tree& t : f.trees) sum.add(t.gain_totals[i]);
    imp[i] = sum.value() / static_cast<double>(f.trees.size());
  }
  return imp;
}

// Features with importance > 0, ascending 0-based indices.
inline std::vector<int> selected_features(const Forest& f) {
  const auto imp = forest_importance(f);
  std::vector<int> sel;
  for (std::size_t i = 0; i < imp.size(); ++i)
    if (imp[i] > 0.0) sel.push_back(static_cast<int>(i));
  return sel;
}

inline constexpr const char* kModelFormat = "pforest-model/1";

inline nlohmann::ordered_json model_to_json(const Forest& f) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["task"] = task_name(f.task);
  j["feature_names"] = f.feature_names;
  j["class_labels"] = f.class_labels;
  j["config"] = {{"ntree", f.config.ntree},
                 {"mtry", f.config.grow.mtry},
                 {"min_node_size", f.config.grow.min_node_size},
                 {"max_depth", f.config.grow.max_depth},
                 {"depth_penalty", f.config.grow.depth_penalty},
                 {"bootstrap", f.config.bootstrap},
                 {"master_seed", f.config.master_seed}};
  j["lambdas"] = f.lambdas;
  nlohmann::ordered_json used = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < f.used_set.size(); ++i)
    if (f.used_set[i]) used.push_back(i);
  j["used_set"] = std::move(used);
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const Tree& t : f.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const Node& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf_value, n.gain});
    nlohmann::ordered_json gains = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.gain_totals.size(); ++i)
      if (t.gain_totals[i] != 0.0) gains.push_back({i, t.gain_totals[i]});
    trees.push_back({{"nodes", std::move(nodes)}, {"gains", std::move(gains)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline void save_model(const Forest& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << model_to_json(f).dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline Forest model_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& what) -> void {
    throw DataError("load_model: malformed model: " + what);
  };
  if (!j.is_object() || !j.contains("format") || j["format"] != kModelFormat)
    fail("missing or unknown format marker");

  Forest f;
  f.task = task_from_name(j.at("task").get<std::string>());
  f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  f.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  const auto& c = j.at("config");
  f.config.ntree = c.at("ntree").get<int>();
  f.config.grow.mtry = c.at("mtry").get<int>();
  f.config.grow.min_node_size = c.at("min_node_size").get<int>();
  f.config.grow.max_depth = c.at("max_depth").get<int>();
  f.config.grow.depth_penalty = c.at("depth_penalty").get<bool>();
  f.config.bootstrap = c.at("bootstrap").get<bool>();
  f.config.master_seed = c.at("master_seed").get<std::uint64_t>();

  const std::size_t p = f.feature_names.size();
  if (p == 0) fail("no features");
  f.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (f.lambdas.size() != p) fail("lambdas length != p");
  f.used_set.assign(p, 0);
  for (const auto& u : j.at("used_set")) {
    const auto i = u.get<std::size_t>();
    if (i >= p) fail("used_set index out of range");
    f.used_set[i] = 1;
  }
  for (const auto& tj : j.at("trees")) {
    Tree t;
    t.gain_totals.assign(p, 0.0);
    const auto& nodes = tj.at("nodes");
    if (nodes.empty()) fail("tree with no nodes");
    for (const auto& nj : nodes) {
      if (!nj.is_array() || nj.size() != 6) fail("node record must have 6 fields");
      Node n;
      n.feature = nj[0].get<int>();
      n.threshold = nj[1].get<double>();
      n.left = nj[2].get<int>();
      n.right = nj[3].get<int>();
      n.leaf_value = nj[4].get<double>();
      n.gain = nj[5].get<double>();
      const int count = static_cast<int>(nodes.size());
      if (n.feature >= static_cast<int>(p) || n.feature < -1) fail("node feature out of range");
      if (n.feature >= 0 && (n.left < 0 || n.left >= count || n.right < 0 || n.right >= count))
        fail("node child out of range");
      if (n.feature < 0 && (n.left != -1 || n.right != -1)) fail("leaf with children");
      t.nodes.push_back(n);
    }
    for (const auto& g : tj.at("gains")) {
      if (!g.is_array() || g.size() != 2) fail("gain record must have 2 fields");
      const auto i = g[0].get<std::size_t>();
      if (i >= p) fail("gain feature out of range");
      t.gain_totals[i] = g[1].get<double>();
    }
    f.trees.push_back(std::move(t));
  }
  if (f.trees.empty()) fail("model has no trees");
  if (static_cast<int>(f.trees.size()) != f.config.ntree) fail("tree count != ntree");
  if (f.task == Task::kClassification && f.class_labels.size() < 2)
    fail("classification model needs >= 2 class labels");
  return f;
}

inline Forest load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_model: " + path + ": " + e.what());
  }
  return model_from_json(j);
}

// Indented one-node-per-line rendering for inspection and golden tests.
inline std::string tree_to_text(const Tree& tree, const std::vector<std::string>& names) {
  std::ostringstream out;
  auto walk = [&](auto&& self, int id, int indent) -> void {
    const Node& n = tree.nodes[static_cast<std::size_t>(id)];
    for (int i = 0; i < indent; ++i) out << "  ";
    if (n.feature < 0) {
      out << "leaf prediction=" << format_double(n.leaf_value) << '\n';
      return;
    }
    out << "split " << names[static_cast<std::size_t>(n.feature)]
        << " <= " << format_double(n.threshold) << " gain=" << format_double(n.gain) << '\n';
    self(self, n.left, indent + 1);
    self(self, n.right, indent + 1);
  };
  walk(walk, 0, 0);
  return out.str();
}

}  // namespace pforest
