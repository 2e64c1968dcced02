#include "pforest/forest.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pforest/prng.hpp"

namespace pforest {
namespace {

namespace fs = std::filesystem;

Dataset reg_dataset(std::vector<std::vector<double>> cols, std::vector<double> y) {
  Dataset d;
  d.task = Task::kRegression;
  for (std::size_t j = 0; j < cols.size(); ++j)
    d.feature_names.push_back("x" + std::to_string(j + 1));
  d.columns = std::move(cols);
  d.y = std::move(y);
  return d;
}

Dataset random_reg(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(p));
  for (auto& c : cols)
    for (int i = 0; i < n; ++i) c.push_back(rng.next_double());
  std::vector<double> y;
  for (int i = 0; i < n; ++i)
    y.push_back(2.0 * cols[0][static_cast<std::size_t>(i)] + 0.3 * rng.next_normal());
  return reg_dataset(std::move(cols), std::move(y));
}

Dataset random_cls(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.task = Task::kClassification;
  d.columns.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    d.feature_names.push_back("x" + std::to_string(j + 1));
    for (int i = 0; i < n; ++i) d.columns[static_cast<std::size_t>(j)].push_back(rng.next_double());
  }
  d.class_labels = {"no", "yes"};
  for (int i = 0; i < n; ++i)
    d.y_code.push_back(d.columns[0][static_cast<std::size_t>(i)] > 0.5 ? 1 : 0);
  d.y_code[0] = 0;
  d.y_code[1] = 1;
  return d;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(TrainForest, DeterministicAcrossRuns) {
  const auto d = random_reg(60, 4, 11);
  ForestConfig cfg;
  cfg.ntree = 7;
  cfg.grow.mtry = 2;
  cfg.grow.min_node_size = 3;
  cfg.master_seed = 99;
  const auto a = train_forest(d, cfg, nullptr);
  const auto b = train_forest(d, cfg, nullptr);
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());

  cfg.master_seed = 100;
  const auto c = train_forest(d, cfg, nullptr);
  EXPECT_NE(model_to_json(a).dump(), model_to_json(c).dump());
}

// Replays the documented per-tree protocol by hand: tree t draws from
// child_seed(master, t), bootstrap rows first, then candidate features, all
// trees sharing one used set and one column sort.
TEST(TrainForest, SeedAndUsedSetProtocol) {
  const auto d = random_reg(50, 5, 21);
  const std::vector<double> lambdas{0.2, 0.9, 0.4, 1.0, 0.6};
  ForestConfig cfg;
  cfg.ntree = 6;
  cfg.grow.mtry = 2;
  cfg.grow.min_node_size = 4;
  cfg.master_seed = 1234;
  const auto f = train_forest(d, cfg, &lambdas);
  ASSERT_EQ(f.trees.size(), 6u);

  const auto sorted = SortedColumns::build(d);
  std::vector<std::uint8_t> used(5, 0);
  const int n = d.n();
  for (int t = 0; t < cfg.ntree; ++t) {
    Rng rng(child_seed(cfg.master_seed, static_cast<std::uint64_t>(t)));
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      rows[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const auto tree = grow_tree(d, rows, cfg.grow, &lambdas, &used, rng, &sorted);
    const auto& got = f.trees[static_cast<std::size_t>(t)];
    ASSERT_EQ(got.nodes.size(), tree.nodes.size()) << "tree " << t;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      EXPECT_EQ(got.nodes[i].feature, tree.nodes[i].feature) << "tree " << t << " node " << i;
      EXPECT_EQ(got.nodes[i].threshold, tree.nodes[i].threshold) << "tree " << t << " node " << i;
      EXPECT_EQ(got.nodes[i].leaf_value, tree.nodes[i].leaf_value) << "tree " << t << " node " << i;
      EXPECT_EQ(got.nodes[i].gain, tree.nodes[i].gain) << "tree " << t << " node " << i;
    }
  }
  EXPECT_EQ(f.used_set, used);
}

TEST(TrainForest, NoBootstrapFullMtryGrowsIdenticalTrees) {
  const auto d = random_reg(40, 3, 31);
  ForestConfig cfg;
  cfg.ntree = 4;
  cfg.bootstrap = false;
  cfg.grow.mtry = 0;  // all features: no randomness left anywhere
  cfg.grow.min_node_size = 3;
  cfg.master_seed = 7;
  const auto f = train_forest(d, cfg, nullptr);
  const auto first = model_to_json(f)["trees"][0].dump();
  for (int t = 1; t < 4; ++t)
    EXPECT_EQ(model_to_json(f)["trees"][static_cast<std::size_t>(t)].dump(), first);

  // and the ensemble mean of identical trees equals the tree prediction
  const auto preds = predict_forest(f, d.columns);
  for (int r = 0; r < d.n(); ++r)
    EXPECT_DOUBLE_EQ(preds[static_cast<std::size_t>(r)],
                     predict_tree_row(f.trees[0], d, r));
}

TEST(TrainForest, ValidationErrors) {
  const auto d = random_reg(20, 3, 41);
  ForestConfig cfg;
  cfg.ntree = 0;
  EXPECT_THROW(train_forest(d, cfg, nullptr), ConfigError);
  cfg.ntree = 1;
  cfg.grow.mtry = 4;
  EXPECT_THROW(train_forest(d, cfg, nullptr), ConfigError);
  cfg.grow.mtry = 0;

  std::vector<double> bad_len{0.5, 0.5};
  EXPECT_THROW(train_forest(d, cfg, &bad_len), ConfigError);
  std::vector<double> zero{0.5, 0.0, 0.5};
  EXPECT_THROW(train_forest(d, cfg, &zero), ConfigError);
  std::vector<double> big{0.5, 1.5, 0.5};
  EXPECT_THROW(train_forest(d, cfg, &big), ConfigError);
}

TEST(PredictForest, RegressionIsStableMeanOfTrees) {
  const auto d = random_reg(30, 3, 51);
  ForestConfig cfg;
  cfg.ntree = 9;
  cfg.grow.min_node_size = 3;
  cfg.master_seed = 3;
  const auto f = train_forest(d, cfg, nullptr);
  const auto preds = predict_forest(f, d.columns);
  for (int r = 0; r < d.n(); ++r) {
    StableSum s;
    for (const auto& t : f.trees) s.add(predict_tree_row(t, d, r));
    EXPECT_EQ(preds[static_cast<std::size_t>(r)], s.value() / 9.0);
  }
}

TEST(PredictForest, ClassificationVoteTieFallsToLowerCode) {
  Forest f;
  f.task = Task::kClassification;
  f.feature_names = {"a"};
  f.class_labels = {"u", "v", "w"};
  f.config.ntree = 2;
  Tree t0, t1;
  t0.nodes.resize(1);
  t0.nodes[0].leaf_value = 1.0;
  t0.gain_totals = {0.0};
  t1.nodes.resize(1);
  t1.nodes[0].leaf_value = 0.0;
  t1.gain_totals = {0.0};
  f.trees = {t0, t1};
  f.lambdas = {1.0};
  f.used_set = {0};

  const std::vector<std::vector<double>> cols{{0.5, 1.5}};
  const auto preds = predict_forest(f, cols);
  EXPECT_EQ(preds[0], 0.0);  // 1-1 tie between codes 0 and 1
  EXPECT_EQ(preds[1], 0.0);

  Tree t2 = t0;
  t2.nodes[0].leaf_value = 2.0;
  f.trees = {t2, t0, t2};
  f.config.ntree = 3;
  EXPECT_EQ(predict_forest(f, cols)[0], 2.0);  // majority wins outright
}

TEST(PredictForest, InputShapeErrors) {
  const auto d = random_reg(20, 3, 61);
  ForestConfig cfg;
  cfg.ntree = 2;
  cfg.master_seed = 1;
  const auto f = train_forest(d, cfg, nullptr);

  std::vector<std::vector<double>> two_cols{{1.0}, {2.0}};
  EXPECT_THROW(predict_forest(f, two_cols), DataError);
  std::vector<std::vector<double>> ragged{{1.0, 2.0}, {1.0}, {1.0, 2.0}};
  EXPECT_THROW(predict_forest(f, ragged), DataError);

  Dataset renamed = d;
  renamed.feature_names[0] = "zz";
  EXPECT_THROW(predict_forest(f, renamed), DataError);
}

TEST(PredictForest, FeatureMatrixAlignsByName) {
  const auto d = random_reg(25, 3, 71);
  ForestConfig cfg;
  cfg.ntree = 5;
  cfg.grow.min_node_size = 3;
  cfg.master_seed = 8;
  const auto f = train_forest(d, cfg, nullptr);
  const auto want = predict_forest(f, d.columns);

  FeatureMatrix m;
  m.names = {"extra", "x3", "x1", "x2"};
  m.columns = {std::vector<double>(static_cast<std::size_t>(d.n()), -9.0), d.columns[2],
               d.columns[0], d.columns[1]};
  EXPECT_EQ(predict_forest(f, m), want);

  FeatureMatrix missing;
  missing.names = {"x1", "x2"};
  missing.columns = {d.columns[0], d.columns[1]};
  EXPECT_THROW(predict_forest(f, missing), DataError);
}

TEST(ForestImportance, MeanOfGainTotalsAndSelection) {
  Forest f;
  f.task = Task::kRegression;
  f.feature_names = {"a", "b", "c"};
  f.config.ntree = 2;
  Tree t0, t1;
  t0.nodes.resize(1);
  t1.nodes.resize(1);
  t0.gain_totals = {4.0, 0.0, 1.0};
  t1.gain_totals = {2.0, 0.0, 0.0};
  f.trees = {t0, t1};
  const auto imp = forest_importance(f);
  EXPECT_DOUBLE_EQ(imp[0], 3.0);
  EXPECT_DOUBLE_EQ(imp[1], 0.0);
  EXPECT_DOUBLE_EQ(imp[2], 0.5);
  EXPECT_EQ(selected_features(f), (std::vector<int>{0, 2}));
}

TEST(ModelIo, RoundTripIsByteIdentical) {
  const auto dir = fs::temp_directory_path() / "pforest_model_rt";
  fs::create_directories(dir);
  const auto d = random_cls(40, 3, 81);
  ForestConfig cfg;
  cfg.ntree = 4;
  cfg.grow.mtry = 2;
  cfg.master_seed = 17;
  const std::vector<double> lambdas{0.3, 0.8, 1.0};
  const auto f = train_forest(d, cfg, &lambdas);

  const auto p1 = (dir / "m1.json").string();
  const auto p2 = (dir / "m2.json").string();
  save_model(f, p1);
  const auto loaded = load_model(p1);
  save_model(loaded, p2);
  EXPECT_EQ(read_file(p1), read_file(p2));

  EXPECT_EQ(loaded.task, f.task);
  EXPECT_EQ(loaded.feature_names, f.feature_names);
  EXPECT_EQ(loaded.class_labels, f.class_labels);
  EXPECT_EQ(loaded.lambdas, f.lambdas);
  EXPECT_EQ(loaded.used_set, f.used_set);
  EXPECT_EQ(loaded.config.master_seed, f.config.master_seed);
  EXPECT_EQ(predict_forest(loaded, d.columns), predict_forest(f, d.columns));
  fs::remove_all(dir);
}

TEST(ModelIo, MalformedModelsAreRejected) {
  const auto d = random_reg(20, 2, 91);
  ForestConfig cfg;
  cfg.ntree = 2;
  cfg.master_seed = 5;
  const auto f = train_forest(d, cfg, nullptr);
  const auto good = model_to_json(f);

  {
    auto j = good;
    j["format"] = "something/9";
    EXPECT_THROW(model_from_json(j), DataError);
  }
  {
    auto j = good;
    j["lambdas"] = {0.5};
    EXPECT_THROW(model_from_json(j), DataError);
  }
  {
    auto j = good;
    j["used_set"] = {7};
    EXPECT_THROW(model_from_json(j), DataError);
  }
  {
    auto j = good;
    j["trees"][0]["nodes"][0][0] = 99;  // feature out of range
    EXPECT_THROW(model_from_json(j), DataError);
  }
  {
    auto j = good;
    j["config"]["ntree"] = 3;  // count mismatch
    EXPECT_THROW(model_from_json(j), DataError);
  }
  {
    auto j = good;
    // turn the root into a leaf that still has children
    j["trees"][0]["nodes"][0][0] = -1;
    EXPECT_THROW(model_from_json(j), DataError);
  }

  const auto dir = fs::temp_directory_path() / "pforest_model_bad";
  fs::create_directories(dir);
  const auto bad = (dir / "bad.json").string();
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_model(bad), DataError);
  EXPECT_THROW(load_model((dir / "absent.json").string()), DataError);
  fs::remove_all(dir);
}

TEST(TrainForest, UnitLambdasMatchDisabledPenaltyBitwise) {
  for (std::uint64_t seed : {3ULL, 404ULL}) {
    const auto d = random_reg(45, 4, child_seed(2222, seed));
    ForestConfig cfg;
    cfg.ntree = 5;
    cfg.grow.mtry = 2;
    cfg.grow.min_node_size = 3;
    cfg.master_seed = seed;
    const std::vector<double> ones(4, 1.0);
    const auto with = train_forest(d, cfg, &ones);
    const auto without = train_forest(d, cfg, nullptr);
    EXPECT_EQ(model_to_json(with).dump(), model_to_json(without).dump()) << "seed " << seed;
  }
}

TEST(TreeToText, RendersSplitsAndLeaves) {
  const auto d = reg_dataset({{1, 2, 3, 4}}, {0, 0, 10, 10});
  GrowConfig cfg;
  cfg.min_node_size = 1;
  Rng rng(1);
  const auto tree = grow_tree(d, {0, 1, 2, 3}, cfg, nullptr, nullptr, rng);
  const auto text = tree_to_text(tree, d.feature_names);
  EXPECT_NE(text.find("split x1 <= 2.5 gain=100"), std::string::npos);
  EXPECT_NE(text.find("leaf prediction=0"), std::string::npos);
  EXPECT_NE(text.find("leaf prediction=10"), std::string::npos);
}

}  // namespace
}  // namespace pforest
