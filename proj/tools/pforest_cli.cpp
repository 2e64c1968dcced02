// pforest command-line front-end: simulate / train / predict / select /
// grid / refit. Every command is deterministic in (inputs, flags, seed).
// Exit codes: 0 success, 2 validation error, 3 runtime or data error.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pforest/pforest.hpp"

namespace {

using namespace pforest;

// Registers options so that a --config JSON file maps one-to-one onto flag
// names (without the leading dashes). Explicit flags override config values.
class FlagTable {
 public:
  explicit FlagTable(CLI::App* app) : app_(app) {
    app->add_option("--config", config_path_,
                    "JSON config file; keys match flag names, explicit flags win");
  }

  template <class T>
  CLI::Option* add(T& var, const std::string& name, const std::string& desc) {
    auto* opt = app_->add_option("--" + name, var, desc)->capture_default_str();
    options_[name] = opt;
    setters_[name] = [&var](const nlohmann::json& v) { var = v.get<T>(); };
    return opt;
  }

  template <class T>
  CLI::Option* add_list(std::vector<T>& var, const std::string& name, const std::string& desc) {
    auto* opt = app_->add_option("--" + name, var, desc)->delimiter(',');
    options_[name] = opt;
    setters_[name] = [&var](const nlohmann::json& v) {
      if (v.is_array())
        var = v.get<std::vector<T>>();
      else
        var = {v.get<T>()};
    };
    return opt;
  }

  CLI::Option* add_switch(bool& var, const std::string& name, const std::string& desc) {
    auto* opt = app_->add_flag("--" + name, var, desc + " (default: off)");
    options_[name] = opt;
    setters_[name] = [&var](const nlohmann::json& v) { var = v.get<bool>(); };
    return opt;
  }

  void merge_config() const {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + config_path_);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const std::exception& e) {
      throw DataError("config file " + config_path_ + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "config") throw ConfigError("config file: 'config' cannot be nested");
      const auto it = setters_.find(key);
      if (it == setters_.end()) throw ConfigError("config file: unknown key '" + key + "'");
      if (options_.at(key)->count() > 0) continue;  // explicit flag wins
      try {
        it->second(value);
      } catch (const std::exception& e) {
        throw ConfigError("config file: key '" + key + "': " + e.what());
      }
    }
  }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

struct PenaltyFlags {
  double lambda0 = 1.0;
  double gamma = 0.0;
  std::string g = "constant";
  std::string correlation = "pearson";
  int bins = 10;
  double epsilon = 0.5;
  bool depth_penalty = false;
  int guide_ntree = 500;
  std::string importance_file;
  bool standard = false;
};

void add_penalty_flags(FlagTable& t, PenaltyFlags& f) {
  t.add(f.lambda0, "lambda0", "base penalty factor in [0, 1]");
  t.add(f.gamma, "gamma", "mixing weight toward the g score, in [0, 1]");
  t.add(f.g, "g",
        "relevance source: constant|correlation|entropy|mutual-information|"
        "boosted-rf|boosted-external|combined");
  t.add(f.correlation, "correlation", "correlation kind: pearson|spearman|kendall");
  t.add(f.bins, "bins", "discretization bins for entropy/mutual-information");
  t.add(f.epsilon, "epsilon", "combined-g correlation threshold in (0, 1)");
  t.add_switch(f.depth_penalty, "depth-penalty", "raise the penalty to the node depth");
  t.add(f.guide_ntree, "guide-ntree", "trees in the internal guide forest");
  t.add(f.importance_file, "importance-file",
        "feature,importance CSV supplying external guide scores");
  t.add_switch(f.standard, "standard",
               "alias for --lambda0 1 --gamma 0 --g constant (plain random forest)");
}

PenaltySpec make_penalty(const PenaltyFlags& f, std::uint64_t guide_seed) {
  PenaltyFlags eff = f;
  if (f.standard) {
    eff.lambda0 = 1.0;
    eff.gamma = 0.0;
    eff.g = "constant";
  }
  PenaltySpec spec;
  spec.lambda0 = eff.lambda0;
  spec.gamma = eff.gamma;
  spec.g = g_kind_from_name(eff.g);
  spec.correlation = correlation_from_name(eff.correlation);
  spec.bins = eff.bins;
  spec.epsilon = eff.epsilon;
  spec.depth_penalty = eff.depth_penalty;
  spec.guide_ntree = eff.guide_ntree;
  spec.guide_seed = guide_seed;
  validate_penalty(spec);
  if (spec.g == GKind::kBoostedExternal && eff.importance_file.empty())
    throw ConfigError("--g boosted-external requires --importance-file");
  return spec;
}

void require_path(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag + " is required");
}

int resolve_mtry(int mtry, int p) {
  if (mtry > 0) return mtry;
  return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  int n = 1000;
  std::uint64_t seed = 0;
  double noise_sd = 1.0;
  double correlated_noise_sd = 0.25;
  std::string out;
  std::string truth_out;
};

void run_simulate(const SimulateOpts& o) {
  require_path(o.out, "--out");
  SimSpec spec;
  spec.n = o.n;
  spec.seed = o.seed;
  spec.noise_sd = o.noise_sd;
  spec.correlated_noise_sd = o.correlated_noise_sd;
  const auto [data, truth] = simulate(spec);
  save_csv(data, o.out);
  const std::string truth_path = o.truth_out.empty() ? o.out + ".truth.json" : o.truth_out;
  write_truth_sidecar(truth, truth_path);
  std::cout << "wrote " << o.out << " (" << data.n() << " rows, " << data.p()
            << " features) and " << truth_path << "\n";
}

// ------------------------------------------------------------------- train

struct TrainOpts {
  std::string data;
  std::string target = "y";
  std::string task = "regression";
  int ntree = 100;
  int mtry = 0;
  int min_node_size = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;
  PenaltyFlags penalty;
  std::string model_out;
  std::string importance_out;
};

Forest train_from_opts(const TrainOpts& o, Dataset& data_out) {
  require_path(o.data, "--data");
  data_out = load_csv(o.data, o.target, task_from_name(o.task));
  const PenaltySpec pen = make_penalty(o.penalty, child_seed(o.seed, 1));

  std::vector<double> external;
  const std::vector<double>* external_ptr = nullptr;
  if (!o.penalty.importance_file.empty()) {
    external = read_importance_file(o.penalty.importance_file, data_out.feature_names);
    external_ptr = &external;
  }
  std::vector<double> lambdas;
  const std::vector<double>* lambdas_ptr = nullptr;
  if (!o.penalty.standard) {
    lambdas = compute_lambdas(pen, data_out, external_ptr);
    lambdas_ptr = &lambdas;
  }

  ForestConfig fc;
  fc.ntree = o.ntree;
  fc.master_seed = o.seed;
  fc.grow.mtry = resolve_mtry(o.mtry, data_out.p());
  fc.grow.min_node_size = o.min_node_size;
  fc.grow.max_depth = o.max_depth;
  fc.grow.depth_penalty = pen.depth_penalty;
  return train_forest(data_out, fc, lambdas_ptr);
}

void write_importance_report(const Forest& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "feature,lambda,importance\n";
  const auto imp = forest_importance(f);
  for (int i = 0; i < f.p(); ++i)
    out << csv::row_string({f.feature_names[static_cast<std::size_t>(i)],
                            format_double(f.lambdas[static_cast<std::size_t>(i)]),
                            format_double(imp[static_cast<std::size_t>(i)])})
        << '\n';
  if (!out) throw DataError("write failed: " + path);
}

void run_train(const TrainOpts& o) {
  require_path(o.model_out, "--model-out");
  Dataset data;
  const Forest f = train_from_opts(o, data);
  save_model(f, o.model_out);
  const std::string imp_path =
      o.importance_out.empty() ? o.model_out + ".importance.csv" : o.importance_out;
  write_importance_report(f, imp_path);
  std::cout << "trained " << f.config.ntree << " trees on " << data.n() << " rows, "
            << data.p() << " features (mtry " << f.config.grow.mtry << "); selected "
            << selected_features(f).size() << "; model " << o.model_out << "; importance "
            << imp_path << "\n";
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  std::string model;
  std::string data;
  std::string target = "y";
  std::string out;
};

void run_predict(const PredictOpts& o) {
  require_path(o.model, "--model");
  require_path(o.data, "--data");
  require_path(o.out, "--out");
  const Forest f = load_model(o.model);
  const FeatureMatrix m = load_matrix_csv(o.data, {o.target});
  const auto pred = predict_forest(f, m);
  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + o.out);
  out << "prediction\n";
  for (double v : pred) {
    if (f.task == Task::kRegression)
      out << format_double(v) << '\n';
    else
      out << csv::quote(f.class_labels[static_cast<std::size_t>(v)]) << '\n';
  }
  if (!out) throw DataError("write failed: " + o.out);
  std::cout << "wrote " << pred.size() << " predictions to " << o.out << "\n";
}

// ------------------------------------------------------------------ select

struct SelectOpts {
  std::string model;
  TrainOpts train;
  std::string out;
};

void run_select(const SelectOpts& o) {
  std::vector<int> selected;
  std::vector<std::string> names;
  if (!o.model.empty()) {
    const Forest f = load_model(o.model);
    selected = selected_features(f);
    names = f.feature_names;
  } else {
    Dataset data;
    const Forest f = train_from_opts(o.train, data);
    selected = selected_features(f);
    names = f.feature_names;
  }
  if (o.out.empty()) {
    for (int i : selected) std::cout << names[static_cast<std::size_t>(i)] << '\n';
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + o.out);
    for (int i : selected) out << names[static_cast<std::size_t>(i)] << '\n';
    if (!out) throw DataError("write failed: " + o.out);
    std::cout << "selected " << selected.size() << " of " << names.size() << " features -> "
              << o.out << "\n";
  }
}

// -------------------------------------------------------------------- grid

struct GridOpts {
  int replicates = 10;
  std::uint64_t seed = 0;
  int n = 1000;
  double noise_sd = 1.0;
  double correlated_noise_sd = 0.25;
  std::string data;
  std::string target = "y";
  std::string task = "regression";
  std::string truth;
  double train_fraction = 0.8;
  bool standardize = true;
  std::vector<int> mtry;
  std::vector<double> lambda0;
  std::vector<double> gamma;
  std::vector<std::string> g;
  std::string correlation = "pearson";
  int bins = 10;
  double epsilon = 0.5;
  bool depth_penalty = false;
  int ntree = 100;
  int min_node_size = 0;
  int max_depth = 0;
  int guide_ntree = 500;
  std::string importance_file;
  int jobs = 1;
  std::string out;
  bool resume = false;
};

void run_grid_cmd(const GridOpts& o) {
  require_path(o.out, "--out");
  GridConfig cfg;
  cfg.replicates = o.replicates;
  cfg.master_seed = o.seed;
  cfg.sim_n = o.n;
  cfg.noise_sd = o.noise_sd;
  cfg.correlated_noise_sd = o.correlated_noise_sd;
  cfg.data_path = o.data;
  cfg.target = o.target;
  cfg.task = task_from_name(o.task);
  cfg.truth_path = o.truth;
  cfg.train_fraction = o.train_fraction;
  cfg.standardize = o.standardize;
  cfg.mtry_list = o.mtry;
  cfg.lambda0_list = o.lambda0;
  cfg.gamma_list = o.gamma;
  for (const auto& name : o.g) cfg.g_list.push_back(g_kind_from_name(name));
  cfg.correlation = correlation_from_name(o.correlation);
  cfg.bins = o.bins;
  cfg.epsilon = o.epsilon;
  cfg.depth_penalty = o.depth_penalty;
  cfg.ntree = o.ntree;
  cfg.min_node_size = o.min_node_size;
  cfg.max_depth = o.max_depth;
  cfg.guide_ntree = o.guide_ntree;
  cfg.importance_path = o.importance_file;
  cfg.jobs = o.jobs;
  run_grid_to_files(cfg, o.out, o.resume);
  std::cout << "grid complete: " << cells_per_replicate(cfg) * cfg.replicates << " cells -> "
            << o.out << " (+ manifest)\n";
}

// ------------------------------------------------------------------- refit

struct RefitOpts {
  std::string data;
  std::string target = "y";
  std::string task = "regression";
  std::string truth;
  int n = 1000;
  double noise_sd = 1.0;
  double correlated_noise_sd = 0.25;
  int resamples = 10;
  double train_fraction = 2.0 / 3.0;
  bool standardize = true;
  PenaltyFlags penalty;
  int ntree = 100;
  int mtry = 0;
  int refit_mtry = 0;
  int min_node_size = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void run_refit(const RefitOpts& o) {
  require_path(o.out, "--out");
  if (o.resamples < 1) throw ConfigError("--resamples must be >= 1");
  if (!(o.train_fraction > 0.0) || !(o.train_fraction < 1.0))
    throw ConfigError("--train-fraction must lie in (0, 1)");
  // guide_seed is re-derived per resample inside select_then_refit
  const PenaltySpec pen = make_penalty(o.penalty, 0);

  Dataset fixed;
  GroundTruth fixed_truth;
  bool has_fixed = false;
  bool has_fixed_truth = false;
  if (!o.data.empty()) {
    fixed = load_csv(o.data, o.target, task_from_name(o.task));
    has_fixed = true;
    if (!o.truth.empty()) {
      fixed_truth = read_truth_sidecar(o.truth);
      has_fixed_truth = true;
    }
  }

  std::vector<double> external;
  bool external_loaded = false;
  std::vector<ExperimentRecord> rows;
  for (int r = 0; r < o.resamples; ++r) {
    const std::uint64_t rep_seed = child_seed(o.seed, static_cast<std::uint64_t>(r));
    Dataset full;
    GroundTruth truth;
    bool has_truth = false;
    if (has_fixed) {
      full = fixed;
      truth = fixed_truth;
      has_truth = has_fixed_truth;
    } else {
      SimSpec spec;
      spec.n = o.n;
      spec.noise_sd = o.noise_sd;
      spec.correlated_noise_sd = o.correlated_noise_sd;
      spec.seed = child_seed(rep_seed, 0);
      auto [d, t] = simulate(spec);
      full = std::move(d);
      truth = std::move(t);
      has_truth = true;
    }
    if (!o.penalty.importance_file.empty() && !external_loaded) {
      external = read_importance_file(o.penalty.importance_file, full.feature_names);
      external_loaded = true;
    }
    const auto plan = split_train_test(full, o.train_fraction, child_seed(rep_seed, 1));
    Dataset train = subset_rows(full, plan.train_indices);
    Dataset test = subset_rows(full, plan.test_indices);
    if (full.task == Task::kRegression && o.standardize) {
      auto st = standardize_target(train, test);
      train = std::move(st.train);
      test = std::move(st.test);
    }
    RefitConfig rc;
    rc.penalty = pen;
    rc.ntree = o.ntree;
    rc.stage1_mtry = o.mtry > 0 ? o.mtry : 0;
    rc.stage2_mtry = o.refit_mtry;
    rc.min_node_size = o.min_node_size;
    rc.max_depth = o.max_depth;
    const auto outcome =
        select_then_refit(train, test, rc, rep_seed, r, external_loaded ? &external : nullptr,
                          has_truth ? &truth : nullptr);
    rows.push_back(outcome.refit);
    rows.push_back(outcome.baseline);
  }
  write_results_csv(o.out, rows);

  // Dual aggregation: mean over resamples and the single best resample.
  StableSum refit_sum, base_sum, nsel_sum;
  int valid = 0, empty = 0, best = -1;
  for (int r = 0; r < o.resamples; ++r) {
    const auto& refit = rows[static_cast<std::size_t>(2 * r)];
    const auto& base = rows[static_cast<std::size_t>(2 * r + 1)];
    base_sum.add(base.metric);
    nsel_sum.add(refit.n_selected);
    if (std::isnan(refit.metric)) {
      ++empty;
      continue;
    }
    refit_sum.add(refit.metric);
    ++valid;
    if (best < 0 || refit.metric < rows[static_cast<std::size_t>(2 * best)].metric) best = r;
  }
  const std::string metric = rows.front().metric_name;
  std::cout << "resamples " << o.resamples << ", mean selected "
            << format_double(nsel_sum.value() / o.resamples) << "\n";
  if (valid > 0)
    std::cout << "mean " << metric << ": refit " << format_double(refit_sum.value() / valid)
              << ", baseline " << format_double(base_sum.value() / o.resamples) << "\n";
  else
    std::cout << "mean " << metric << ": refit n/a (no features selected), baseline "
              << format_double(base_sum.value() / o.resamples) << "\n";
  if (empty > 0)
    std::cout << empty << " resample(s) selected zero features (metric reported as nan)\n";
  if (best >= 0) {
    const auto& refit = rows[static_cast<std::size_t>(2 * best)];
    const auto& base = rows[static_cast<std::size_t>(2 * best + 1)];
    std::cout << "best resample " << best << " by refit " << metric << ": refit "
              << format_double(refit.metric) << " (selected " << refit.n_selected
              << "), baseline " << format_double(base.metric) << "\n";
  }
  std::cout << "wrote " << rows.size() << " rows to " << o.out << "\n";
}

void add_train_flags(FlagTable& t, TrainOpts& o, bool with_outputs) {
  t.add(o.data, "data", "training CSV with a target column");
  t.add(o.target, "target", "target column name");
  t.add(o.task, "task", "regression|classification");
  t.add(o.ntree, "ntree", "number of trees");
  t.add(o.mtry, "mtry", "features tried per split; 0 = floor(sqrt(p))");
  t.add(o.min_node_size, "min-node-size", "smallest splittable node; 0 = task default (5/1)");
  t.add(o.max_depth, "max-depth", "depth cap; 0 = unlimited");
  t.add(o.seed, "seed", "master seed");
  add_penalty_flags(t, o.penalty);
  if (with_outputs) {
    t.add(o.model_out, "model-out", "output model file (JSON)");
    t.add(o.importance_out, "importance-out",
          "output importance CSV; default <model-out>.importance.csv");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pforest: regularized random forests with guided gain penalties"};
  app.set_version_flag("--version", pforest::kVersion);
  app.require_subcommand(1);

  auto sim = std::make_shared<SimulateOpts>();
  {
    auto* cmd = app.add_subcommand("simulate", "generate the synthetic benchmark dataset");
    auto table = std::make_shared<FlagTable>(cmd);
    table->add(sim->n, "n", "number of rows");
    table->add(sim->seed, "seed", "generator seed");
    table->add(sim->noise_sd, "noise-sd", "response noise standard deviation");
    table->add(sim->correlated_noise_sd, "correlated-noise-sd",
               "perturbation sd for the correlated block");
    table->add(sim->out, "out", "output dataset CSV");
    table->add(sim->truth_out, "truth-out", "ground-truth sidecar; default <out>.truth.json");
    cmd->callback([table, sim] {
      table->merge_config();
      run_simulate(*sim);
    });
  }

  auto train = std::make_shared<TrainOpts>();
  {
    auto* cmd = app.add_subcommand("train", "train a forest and write model + importance");
    auto table = std::make_shared<FlagTable>(cmd);
    add_train_flags(*table, *train, true);
    cmd->callback([table, train] {
      table->merge_config();
      run_train(*train);
    });
  }

  auto pred = std::make_shared<PredictOpts>();
  {
    auto* cmd = app.add_subcommand("predict", "predict with a saved model");
    auto table = std::make_shared<FlagTable>(cmd);
    table->add(pred->model, "model", "model file from train");
    table->add(pred->data, "data", "feature CSV; extra columns are ignored");
    table->add(pred->target, "target", "target column to skip if present");
    table->add(pred->out, "out", "output prediction CSV");
    cmd->callback([table, pred] {
      table->merge_config();
      run_predict(*pred);
    });
  }

  auto sel = std::make_shared<SelectOpts>();
  {
    auto* cmd = app.add_subcommand(
        "select", "list features with positive importance (from a model or a fresh run)");
    auto table = std::make_shared<FlagTable>(cmd);
    table->add(sel->model, "model", "existing model file; omit to train in place");
    add_train_flags(*table, sel->train, false);
    table->add(sel->out, "out", "output file, one feature per line; empty = stdout");
    cmd->callback([table, sel] {
      table->merge_config();
      run_select(*sel);
    });
  }

  auto grid = std::make_shared<GridOpts>();
  {
    auto* cmd = app.add_subcommand("grid", "sweep (mtry, lambda0, gamma, g) over replicates");
    auto table = std::make_shared<FlagTable>(cmd);
    table->add(grid->replicates, "replicates", "independent replicates");
    table->add(grid->seed, "seed", "master seed");
    table->add(grid->n, "n", "rows per simulated replicate (when --data is absent)");
    table->add(grid->noise_sd, "noise-sd", "simulation response noise sd");
    table->add(grid->correlated_noise_sd, "correlated-noise-sd",
               "simulation correlated-block perturbation sd");
    table->add(grid->data, "data", "fixed dataset CSV; empty = simulate per replicate");
    table->add(grid->target, "target", "target column name");
    table->add(grid->task, "task", "regression|classification");
    table->add(grid->truth, "truth", "ground-truth sidecar for the fixed dataset");
    table->add(grid->train_fraction, "train-fraction", "train share of each replicate");
    table->add(grid->standardize, "standardize", "standardize y on train stats (regression)");
    table->add_list(grid->mtry, "mtry", "mtry values, comma separated");
    table->add_list(grid->lambda0, "lambda0", "lambda0 values, comma separated");
    table->add_list(grid->gamma, "gamma", "gamma values, comma separated");
    table->add_list(grid->g, "g", "g sources, comma separated");
    table->add(grid->correlation, "correlation", "correlation kind: pearson|spearman|kendall");
    table->add(grid->bins, "bins", "discretization bins for entropy/mutual-information");
    table->add(grid->epsilon, "epsilon", "combined-g correlation threshold");
    table->add_switch(grid->depth_penalty, "depth-penalty", "raise penalties to node depth");
    table->add(grid->ntree, "ntree", "trees per cell");
    table->add(grid->min_node_size, "min-node-size", "smallest splittable node; 0 = task default");
    table->add(grid->max_depth, "max-depth", "depth cap; 0 = unlimited");
    table->add(grid->guide_ntree, "guide-ntree", "trees in the per-replicate guide forest");
    table->add(grid->importance_file, "importance-file", "external importances CSV");
    table->add(grid->jobs, "jobs", "concurrent cells within a replicate");
    table->add(grid->out, "out", "results CSV; manifest written as <out>.manifest.json");
    table->add_switch(grid->resume, "resume", "continue an interrupted run");
    cmd->callback([table, grid] {
      table->merge_config();
      run_grid_cmd(*grid);
    });
  }

  auto refit = std::make_shared<RefitOpts>();
  {
    auto* cmd = app.add_subcommand(
        "refit", "select features with a regularized forest, refit standard, compare to baseline");
    auto table = std::make_shared<FlagTable>(cmd);
    table->add(refit->data, "data", "fixed dataset CSV; empty = simulate per resample");
    table->add(refit->target, "target", "target column name");
    table->add(refit->task, "task", "regression|classification");
    table->add(refit->truth, "truth", "ground-truth sidecar for the fixed dataset");
    table->add(refit->n, "n", "rows per simulated resample");
    table->add(refit->noise_sd, "noise-sd", "simulation response noise sd");
    table->add(refit->correlated_noise_sd, "correlated-noise-sd",
               "simulation correlated-block perturbation sd");
    table->add(refit->resamples, "resamples", "train/test resamples");
    table->add(refit->train_fraction, "train-fraction", "train share per resample");
    table->add(refit->standardize, "standardize", "standardize y on train stats (regression)");
    add_penalty_flags(*table, refit->penalty);
    table->add(refit->ntree, "ntree", "trees per forest");
    table->add(refit->mtry, "mtry", "stage-1 mtry; 0 = floor(sqrt(p))");
    table->add(refit->refit_mtry, "refit-mtry",
               "stage-2/baseline mtry; 0 = floor(sqrt(#features))");
    table->add(refit->min_node_size, "min-node-size", "smallest splittable node; 0 = task default");
    table->add(refit->max_depth, "max-depth", "depth cap; 0 = unlimited");
    table->add(refit->seed, "seed", "master seed");
    table->add(refit->out, "out", "results CSV (refit + baseline row per resample)");
    cmd->callback([table, refit] {
      table->merge_config();
      run_refit(*refit);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pforest::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pforest::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
