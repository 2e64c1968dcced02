#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pforest/csv.hpp"
#include "pforest/dataset.hpp"
#include "pforest/forest.hpp"
#include "pforest/metrics.hpp"
#include "pforest/penalty.hpp"
#include "pforest/simulate.hpp"
#include "pforest/version.hpp"

namespace pforest {

inline std::string g_kind_name(GKind g) {
  switch (g) {
    case GKind::kConstant: return "constant";
    case GKind::kCorrelation: return "correlation";
    case GKind::kEntropy: return "entropy";
    case GKind::kMutualInformation: return "mutual-information";
    case GKind::kBoostedRf: return "boosted-rf";
    case GKind::kBoostedExternal: return "boosted-external";
    case GKind::kCombined: return "combined";
  }
  return "constant";
}

inline GKind g_kind_from_name(const std::string& s) {
  if (s == "constant") return GKind::kConstant;
  if (s == "correlation") return GKind::kCorrelation;
  if (s == "entropy") return GKind::kEntropy;
  if (s == "mutual-information") return GKind::kMutualInformation;
  if (s == "boosted-rf") return GKind::kBoostedRf;
  if (s == "boosted-external") return GKind::kBoostedExternal;
  if (s == "combined") return GKind::kCombined;
  throw ConfigError("unknown g source '" + s + "'");
}

inline std::string correlation_name(CorrelationKind k) {
  switch (k) {
    case CorrelationKind::kPearson: return "pearson";
    case CorrelationKind::kSpearman: return "spearman";
    case CorrelationKind::kKendall: return "kendall";
  }
  return "pearson";
}

inline CorrelationKind correlation_from_name(const std::string& s) {
  if (s == "pearson") return CorrelationKind::kPearson;
  if (s == "spearman") return CorrelationKind::kSpearman;
  if (s == "kendall") return CorrelationKind::kKendall;
  throw ConfigError("unknown correlation kind '" + s + "'");
}

inline std::string metric_name_for(Task task) {
  return task == Task::kRegression ? "rmse" : "misclassification_rate";
}

// One results-CSV row. `selected` holds 0-based indices in memory; the CSV
// prints them 1-based, semicolon-joined.
struct ExperimentRecord {
  int replicate = 0;
  int mtry = 0;
  double lambda0 = 1.0;
  double gamma = 0.0;
  std::string g = "constant";
  std::string metric_name;
  double metric = 0.0;
  int n_selected = 0;
  double pct_important = 0.0;
  double pct_correlated = 0.0;
  std::vector<int> selected;
};

inline constexpr const char* kResultsHeader =
    "replicate,mtry,lambda0,gamma,g,metric_name,metric,n_selected,pct_important,"
    "pct_correlated,selected_features";

inline std::string record_line(const ExperimentRecord& r) {
  std::string sel;
  for (std::size_t i = 0; i < r.selected.size(); ++i) {
    if (i > 0) sel += ';';
    sel += std::to_string(r.selected[i] + 1);
  }
  std::vector<std::string> fields = {std::to_string(r.replicate),
                                     std::to_string(r.mtry),
                                     format_double(r.lambda0),
                                     format_double(r.gamma),
                                     r.g,
                                     r.metric_name,
                                     format_double(r.metric),
                                     std::to_string(r.n_selected),
                                     format_double(r.pct_important),
                                     format_double(r.pct_correlated),
                                     sel};
  return csv::row_string(fields);
}

inline void write_results_csv(const std::string& path,
                              const std::vector<ExperimentRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << kResultsHeader << '\n';
  for (const auto& r : records) out << record_line(r) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline std::vector<ExperimentRecord> parse_results_csv(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || csv::row_string(rows[0]) != kResultsHeader)
    throw DataError("results csv " + path + ": missing or unexpected header");
  std::vector<ExperimentRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 11)
      throw DataError("results csv " + path + ": row " + std::to_string(i) +
                      ": expected 11 fields");
    ExperimentRecord r;
    r.replicate = std::stoi(f[0]);
    r.mtry = std::stoi(f[1]);
    if (!parse_double(f[2], r.lambda0) || !parse_double(f[3], r.gamma))
      throw DataError("results csv " + path + ": bad penalty fields");
    r.g = f[4];
    r.metric_name = f[5];
    if (!parse_double(f[6], r.metric))
      throw DataError("results csv " + path + ": bad metric field");
    r.n_selected = std::stoi(f[7]);
    if (!parse_double(f[8], r.pct_important) || !parse_double(f[9], r.pct_correlated))
      throw DataError("results csv " + path + ": bad percentage fields");
    if (!f[10].empty()) {
      std::size_t pos = 0;
      while (pos <= f[10].size()) {
        const auto semi = f[10].find(';', pos);
        const std::string tok = f[10].substr(pos, semi == std::string::npos ? semi : semi - pos);
        r.selected.push_back(std::stoi(tok) - 1);
        if (semi == std::string::npos) break;
        pos = semi + 1;
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

// Grid sweep over (mtry x lambda0 x gamma x g) on simulated replicates or a
// fixed dataset resampled per replicate. Cell enumeration is replicate-major,
// then mtry, lambda0, gamma, g in listed order.
struct GridConfig {
  int replicates = 10;
  std::uint64_t master_seed = 0;

  // simulation source (used when data_path is empty)
  int sim_n = 1000;
  double noise_sd = 1.0;
  double correlated_noise_sd = 0.25;

  // file source
  std::string data_path;
  std::string target = "y";
  Task task = Task::kRegression;
  std::string truth_path;  // optional ground-truth sidecar

  double train_fraction = 0.8;
  bool standardize = true;  // regression only: y standardized on train stats

  std::vector<int> mtry_list;
  std::vector<double> lambda0_list;
  std::vector<double> gamma_list;
  std::vector<GKind> g_list;

  CorrelationKind correlation = CorrelationKind::kPearson;
  int bins = 10;
  double epsilon = 0.5;
  bool depth_penalty = false;
  int ntree = 100;
  int min_node_size = 0;
  int max_depth = 0;
  int guide_ntree = 500;
  std::string importance_path;  // external importances for boosted-external
  int jobs = 1;
};

inline int cells_per_replicate(const GridConfig& cfg) {
  return static_cast<int>(cfg.mtry_list.size() * cfg.lambda0_list.size() *
                          cfg.gamma_list.size() * cfg.g_list.size());
}

inline void validate_grid(const GridConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("grid: replicates must be >= 1");
  if (cfg.mtry_list.empty() || cfg.lambda0_list.empty() || cfg.gamma_list.empty() ||
      cfg.g_list.empty())
    throw ConfigError("grid: mtry, lambda0, gamma and g lists must be non-empty");
  for (int m : cfg.mtry_list)
    if (m < 1) throw ConfigError("grid: mtry values must be >= 1");
  if (cfg.data_path.empty()) {
    if (cfg.sim_n < 2) throw ConfigError("grid: simulation needs n >= 2");
    for (int m : cfg.mtry_list)
      if (m > kSimFeatures)
        throw ConfigError("grid: mtry " + std::to_string(m) + " exceeds p = " +
                          std::to_string(kSimFeatures));
  }
  for (double l : cfg.lambda0_list)
    if (!(l >= 0.0) || l > 1.0) throw ConfigError("grid: lambda0 values must lie in [0, 1]");
  for (double g : cfg.gamma_list)
    if (!(g >= 0.0) || g > 1.0) throw ConfigError("grid: gamma values must lie in [0, 1]");
  if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
    throw ConfigError("grid: train-fraction must lie in (0, 1)");
  if (cfg.bins < 2) throw ConfigError("grid: bins must be >= 2");
  if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0))
    throw ConfigError("grid: epsilon must lie in (0, 1)");
  if (cfg.ntree < 1 || cfg.guide_ntree < 1) throw ConfigError("grid: ntree must be >= 1");
  if (cfg.min_node_size < 0 || cfg.max_depth < 0)
    throw ConfigError("grid: node-size/depth limits must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("grid: jobs must be >= 1");
  bool needs_external = false;
  for (GKind g : cfg.g_list)
    if (g == GKind::kBoostedExternal) needs_external = true;
  if (needs_external && cfg.importance_path.empty())
    throw ConfigError("grid: g boosted-external requires an importance file");
}

// Seeds, grid lists, and code version — everything that determines the result
// bytes. No timestamps, so a rerun writes the identical manifest.
inline nlohmann::ordered_json grid_manifest(const GridConfig& cfg) {
  nlohmann::ordered_json data;
  if (cfg.data_path.empty()) {
    data = {{"source", "simulate"},
            {"n", cfg.sim_n},
            {"noise-sd", cfg.noise_sd},
            {"correlated-noise-sd", cfg.correlated_noise_sd}};
  } else {
    data = {{"source", "file"},
            {"path", cfg.data_path},
            {"target", cfg.target},
            {"task", task_name(cfg.task)},
            {"truth", cfg.truth_path}};
  }
  std::vector<std::string> g_names;
  for (GKind g : cfg.g_list) g_names.push_back(g_kind_name(g));
  nlohmann::ordered_json j;
  j["format"] = "pforest-grid/1";
  j["version"] = kVersion;
  j["config"] = {{"replicates", cfg.replicates},
                 {"seed", cfg.master_seed},
                 {"data", std::move(data)},
                 {"train-fraction", cfg.train_fraction},
                 {"standardize", cfg.standardize},
                 {"mtry", cfg.mtry_list},
                 {"lambda0", cfg.lambda0_list},
                 {"gamma", cfg.gamma_list},
                 {"g", g_names},
                 {"correlation", correlation_name(cfg.correlation)},
                 {"bins", cfg.bins},
                 {"epsilon", cfg.epsilon},
                 {"depth-penalty", cfg.depth_penalty},
                 {"ntree", cfg.ntree},
                 {"min-node-size", cfg.min_node_size},
                 {"max-depth", cfg.max_depth},
                 {"guide-ntree", cfg.guide_ntree},
                 {"importance-file", cfg.importance_path}};
  j["cells_per_replicate"] = cells_per_replicate(cfg);
  j["total_cells"] = cells_per_replicate(cfg) * cfg.replicates;
  return j;
}

namespace detail {

struct ReplicateData {
  Dataset train;
  Dataset test;
  SortedColumns train_sorted;
  GroundTruth truth;
  bool has_truth = false;
  std::uint64_t seed = 0;  // replicate seed; cell sub-seeds derive from it
};

// Sub-stream layout per replicate: 0 = simulation, 1 = train/test split,
// 2 = guide forest, 3 + cell = that cell's forest.
inline ReplicateData prepare_replicate(const GridConfig& cfg, const Dataset* fixed,
                                       const GroundTruth* fixed_truth, int replicate) {
  ReplicateData rd;
  rd.seed = child_seed(cfg.master_seed, replicate);
  Dataset full;
  if (fixed == nullptr) {
    SimSpec spec;
    spec.n = cfg.sim_n;
    spec.noise_sd = cfg.noise_sd;
    spec.correlated_noise_sd = cfg.correlated_noise_sd;
    spec.seed = child_seed(rd.seed, 0);
    auto [d, truth] = simulate(spec);
    full = std::move(d);
    rd.truth = std::move(truth);
    rd.has_truth = true;
  } else {
    full = *fixed;
    if (fixed_truth != nullptr) {
      rd.truth = *fixed_truth;
      rd.has_truth = true;
    }
  }
  for (int m : cfg.mtry_list)
    if (m > full.p())
      throw ConfigError("grid: mtry " + std::to_string(m) + " exceeds p = " +
                        std::to_string(full.p()));
  const auto plan = split_train_test(full, cfg.train_fraction, child_seed(rd.seed, 1));
  rd.train = subset_rows(full, plan.train_indices);
  rd.test = subset_rows(full, plan.test_indices);
  if (full.task == Task::kRegression && cfg.standardize) {
    auto st = standardize_target(rd.train, rd.test);
    rd.train = std::move(st.train);
    rd.test = std::move(st.test);
  }
  rd.train_sorted = SortedColumns::build(rd.train);
  return rd;
}

// g vectors are shared across the replicate's cells; the guide forest behind
// boosted-rf/combined is trained once.
inline std::map<GKind, std::vector<double>> prepare_g(const GridConfig& cfg,
                                                      const ReplicateData& rd,
                                                      const std::vector<double>* external) {
  std::map<GKind, std::vector<double>> out;
  std::optional<std::vector<double>> guide;
  auto guide_imp = [&]() -> const std::vector<double>& {
    if (!guide) {
      ForestConfig gc;
      gc.ntree = cfg.guide_ntree;
      gc.master_seed = child_seed(rd.seed, 2);
      gc.grow.mtry =
          std::max(1, static_cast<int>(std::sqrt(static_cast<double>(rd.train.p()))));
      guide = forest_importance(train_forest(rd.train, gc, nullptr, &rd.train_sorted));
    }
    return *guide;
  };
  for (GKind g : cfg.g_list) {
    if (out.count(g)) continue;
    PenaltySpec spec;
    spec.g = g;
    spec.correlation = cfg.correlation;
    spec.bins = cfg.bins;
    spec.epsilon = cfg.epsilon;
    switch (g) {
      case GKind::kBoostedRf:
        out[g] = g_boosted(guide_imp());
        break;
      case GKind::kBoostedExternal:
        out[g] = compute_g(spec, rd.train, external);
        break;
      case GKind::kCombined:
        out[g] = external != nullptr ? g_combined(rd.train, cfg.epsilon, *external,
                                                  cfg.correlation)
                                     : g_combined(rd.train, cfg.epsilon, guide_imp(),
                                                  cfg.correlation);
        break;
      default:
        out[g] = compute_g(spec, rd.train);
        break;
    }
  }
  return out;
}

struct CellParams {
  int mtry;
  double lambda0;
  double gamma;
  GKind g;
  int local_index;  // position in the replicate's canonical enumeration
};

inline std::vector<CellParams> enumerate_cells(const GridConfig& cfg) {
  std::vector<CellParams> cells;
  int idx = 0;
  for (int m : cfg.mtry_list)
    for (double l0 : cfg.lambda0_list)
      for (double ga : cfg.gamma_list)
        for (GKind g : cfg.g_list) cells.push_back({m, l0, ga, g, idx++});
  return cells;
}

inline ExperimentRecord run_cell(const GridConfig& cfg, const ReplicateData& rd,
                                 const std::map<GKind, std::vector<double>>& g_vectors,
                                 const CellParams& cell, int replicate) {
  const auto& g_vec = g_vectors.at(cell.g);
  std::vector<double> lambdas(g_vec.size());
  for (std::size_t i = 0; i < g_vec.size(); ++i)
    lambdas[i] = clamp_lambda(mix_lambda(cell.lambda0, cell.gamma, g_vec[i]));

  ForestConfig fc;
  fc.ntree = cfg.ntree;
  fc.master_seed = child_seed(rd.seed, 3 + static_cast<std::uint64_t>(cell.local_index));
  fc.grow.mtry = cell.mtry;
  fc.grow.min_node_size = cfg.min_node_size;
  fc.grow.max_depth = cfg.max_depth;
  fc.grow.depth_penalty = cfg.depth_penalty;
  const Forest forest = train_forest(rd.train, fc, &lambdas, &rd.train_sorted);

  ExperimentRecord rec;
  rec.replicate = replicate;
  rec.mtry = cell.mtry;
  rec.lambda0 = cell.lambda0;
  rec.gamma = cell.gamma;
  rec.g = g_kind_name(cell.g);
  rec.metric_name = metric_name_for(rd.train.task);
  const auto pred = predict_forest(forest, rd.test);
  rec.metric = rd.train.task == Task::kRegression
                   ? rmse(pred, rd.test.y)
                   : misclassification_rate(
                         pred, std::vector<double>(rd.test.y_code.begin(), rd.test.y_code.end()));
  rec.selected = selected_features(forest);
  rec.n_selected = static_cast<int>(rec.selected.size());
  if (rd.has_truth) {
    const auto [pi, pc] = table2_metrics(rec.selected, rd.truth);
    rec.pct_important = pi;
    rec.pct_correlated = pc;
  }
  return rec;
}

}  // namespace detail

// Runs every cell from global index `first_cell` onward, invoking `sink` in
// canonical order. Replicates whose cells are all below first_cell are
// skipped without touching the RNG-derived results of later ones (every seed
// derives from the replicate index, never from execution history).
inline void run_grid_cells(const GridConfig& cfg, int first_cell,
                           const std::function<void(const ExperimentRecord&)>& sink) {
  validate_grid(cfg);
  const auto cells = detail::enumerate_cells(cfg);
  const int cpr = static_cast<int>(cells.size());

  Dataset fixed;
  GroundTruth fixed_truth;
  const Dataset* fixed_ptr = nullptr;
  const GroundTruth* fixed_truth_ptr = nullptr;
  if (!cfg.data_path.empty()) {
    fixed = load_csv(cfg.data_path, cfg.target, cfg.task);
    fixed_ptr = &fixed;
    if (!cfg.truth_path.empty()) {
      fixed_truth = read_truth_sidecar(cfg.truth_path);
      fixed_truth_ptr = &fixed_truth;
    }
  }
  std::vector<double> external;
  const std::vector<double>* external_ptr = nullptr;

  for (int r = 0; r < cfg.replicates; ++r) {
    const int rep_begin = r * cpr;
    if (rep_begin + cpr <= first_cell) continue;
    const auto rd = detail::prepare_replicate(cfg, fixed_ptr, fixed_truth_ptr, r);
    if (!cfg.importance_path.empty() && external_ptr == nullptr) {
      external = read_importance_file(cfg.importance_path, rd.train.feature_names);
      external_ptr = &external;
    }
    const auto g_vectors = detail::prepare_g(cfg, rd, external_ptr);

    const int pending_from = std::max(0, first_cell - rep_begin);
    if (cfg.jobs <= 1) {
      for (int c = pending_from; c < cpr; ++c)
        sink(detail::run_cell(cfg, rd, g_vectors, cells[static_cast<std::size_t>(c)], r));
      continue;
    }
    // Parallel cells, results delivered in canonical order.
    const int pending = cpr - pending_from;
    std::vector<std::optional<ExperimentRecord>> results(static_cast<std::size_t>(pending));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&]() {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= pending) return;
        try {
          results[static_cast<std::size_t>(k)] = detail::run_cell(
              cfg, rd, g_vectors, cells[static_cast<std::size_t>(pending_from + k)], r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    const int nthreads = std::min(cfg.jobs, pending);
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    for (auto& rec : results) sink(*rec);
  }
}

inline std::vector<ExperimentRecord> run_grid(const GridConfig& cfg) {
  std::vector<ExperimentRecord> records;
  run_grid_cells(cfg, 0, [&](const ExperimentRecord& r) { records.push_back(r); });
  return records;
}

// Streams results to `out_csv` with a sibling manifest (out_csv +
// ".manifest.json"), flushing after every row. With resume = true an existing
// results file is continued: the manifest must match byte-for-byte, a partial
// trailing line is dropped, and computation restarts at the first missing
// cell — the finished file is byte-identical to an uninterrupted run.
inline void run_grid_to_files(const GridConfig& cfg, const std::string& out_csv, bool resume) {
  validate_grid(cfg);
  namespace fs = std::filesystem;
  const std::string manifest_path = out_csv + ".manifest.json";
  const std::string manifest = grid_manifest(cfg).dump(2) + "\n";
  const int total = cells_per_replicate(cfg) * cfg.replicates;

  int done = 0;
  bool fresh = true;
  if (resume && fs::exists(out_csv)) {
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf) throw DataError("resume: manifest not found: " + manifest_path);
    std::string existing((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
    if (existing != manifest)
      throw DataError("resume: configuration does not match the existing manifest");

    std::ifstream in(out_csv, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto last_nl = content.find_last_of('\n');
    if (last_nl == std::string::npos) {
      fresh = true;  // no complete line survived; start over
    } else {
      content.resize(last_nl + 1);  // drop any partial trailing line
      std::size_t lines = 0;
      for (char ch : content)
        if (ch == '\n') ++lines;
      const auto header_end = content.find('\n');
      if (content.substr(0, header_end) != kResultsHeader)
        throw DataError("resume: unexpected results header in " + out_csv);
      done = static_cast<int>(lines) - 1;
      if (done > total) throw DataError("resume: existing results exceed the grid size");
      fs::resize_file(out_csv, content.size());
      fresh = false;
    }
  }

  {
    std::ofstream mf(manifest_path, std::ios::binary | std::ios::trunc);
    if (!mf) throw DataError("cannot write file: " + manifest_path);
    mf << manifest;
  }
  std::ofstream out;
  if (fresh) {
    out.open(out_csv, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + out_csv);
    out << kResultsHeader << '\n';
    out.flush();
    done = 0;
  } else {
    out.open(out_csv, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot write file: " + out_csv);
  }

  run_grid_cells(cfg, done, [&](const ExperimentRecord& r) {
    out << record_line(r) << '\n';
    out.flush();
    if (!out) throw DataError("write failed: " + out_csv);
  });
}

// Two-stage protocol: a regularized forest picks features, then a standard
// forest restricted to them is scored on the test set. The companion baseline
// is the standard forest on all features with matched settings.
struct RefitConfig {
  PenaltySpec penalty;  // stage-1 source; guide_seed is overridden per replicate
  int ntree = 100;
  int stage1_mtry = 0;  // 0 = floor(sqrt p)
  int stage2_mtry = 0;  // 0 = floor(sqrt |selected|); clamped to |selected|
  int min_node_size = 0;
  int max_depth = 0;
};

struct RefitOutcome {
  ExperimentRecord refit;     // stage-2 metric, stage-1 selection stats
  ExperimentRecord baseline;  // standard forest on all features
};

inline RefitOutcome select_then_refit(const Dataset& train, const Dataset& test,
                                      const RefitConfig& cfg, std::uint64_t replicate_seed,
                                      int replicate,
                                      const std::vector<double>* external = nullptr,
                                      const GroundTruth* truth = nullptr) {
  validate_penalty(cfg.penalty);
  if (cfg.ntree < 1) throw ConfigError("refit: ntree must be >= 1");
  const int p = train.p();
  const int sqrt_p = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
  const std::string metric_name = metric_name_for(train.task);

  PenaltySpec pen = cfg.penalty;
  pen.guide_seed = child_seed(replicate_seed, 2);
  const auto lambdas = compute_lambdas(pen, train, external);

  ForestConfig stage1;
  stage1.ntree = cfg.ntree;
  stage1.master_seed = child_seed(replicate_seed, 3);
  stage1.grow.mtry = cfg.stage1_mtry > 0 ? cfg.stage1_mtry : sqrt_p;
  stage1.grow.min_node_size = cfg.min_node_size;
  stage1.grow.max_depth = cfg.max_depth;
  stage1.grow.depth_penalty = cfg.penalty.depth_penalty;
  const Forest selector = train_forest(train, stage1, &lambdas);
  const auto selected = selected_features(selector);

  auto truth_pcts = [&](const std::vector<int>& sel, ExperimentRecord& rec) {
    if (truth != nullptr) {
      const auto [pi, pc] = table2_metrics(sel, *truth);
      rec.pct_important = pi;
      rec.pct_correlated = pc;
    }
  };
  auto evaluate = [&](const Forest& f, const Dataset& te) {
    const auto pred = predict_forest(f, te);
    return train.task == Task::kRegression
               ? rmse(pred, te.y)
               : misclassification_rate(
                     pred, std::vector<double>(te.y_code.begin(), te.y_code.end()));
  };

  RefitOutcome out;
  out.refit.replicate = replicate;
  out.refit.lambda0 = cfg.penalty.lambda0;
  out.refit.gamma = cfg.penalty.gamma;
  out.refit.g = g_kind_name(cfg.penalty.g);
  out.refit.metric_name = metric_name;
  out.refit.selected = selected;
  out.refit.n_selected = static_cast<int>(selected.size());
  truth_pcts(selected, out.refit);
  if (selected.empty()) {
    // Zero-feature degeneracy: flagged with an unfit metric, not fatal.
    out.refit.mtry = 0;
    out.refit.metric = std::numeric_limits<double>::quiet_NaN();
  } else {
    const Dataset train2 = subset_features(train, selected);
    const Dataset test2 = subset_features(test, selected);
    const int sel_p = train2.p();
    ForestConfig stage2;
    stage2.ntree = cfg.ntree;
    stage2.master_seed = child_seed(replicate_seed, 4);
    stage2.grow.mtry =
        cfg.stage2_mtry > 0
            ? std::min(cfg.stage2_mtry, sel_p)
            : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(sel_p))));
    stage2.grow.min_node_size = cfg.min_node_size;
    stage2.grow.max_depth = cfg.max_depth;
    const Forest refit = train_forest(train2, stage2, nullptr);
    out.refit.mtry = stage2.grow.mtry;
    out.refit.metric = evaluate(refit, test2);
  }

  ForestConfig base;
  base.ntree = cfg.ntree;
  base.master_seed = child_seed(replicate_seed, 5);
  base.grow.mtry = cfg.stage2_mtry > 0 ? std::min(cfg.stage2_mtry, p) : sqrt_p;
  base.grow.min_node_size = cfg.min_node_size;
  base.grow.max_depth = cfg.max_depth;
  const Forest baseline = train_forest(train, base, nullptr);
  out.baseline.replicate = replicate;
  out.baseline.mtry = base.grow.mtry;
  out.baseline.lambda0 = 1.0;
  out.baseline.gamma = 0.0;
  out.baseline.g = "constant";
  out.baseline.metric_name = metric_name;
  out.baseline.metric = evaluate(baseline, test);
  out.baseline.selected = selected_features(baseline);
  out.baseline.n_selected = static_cast<int>(out.baseline.selected.size());
  truth_pcts(out.baseline.selected, out.baseline);
  return out;
}

}  // namespace pforest
