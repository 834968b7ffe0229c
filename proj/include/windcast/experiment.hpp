#pragma once

// Experiment harness. Each experiment writes into <out_dir>/<run_id>/:
//   config.json   resolved configuration
//   results.json  one raw record per trained model (every table cell derives from these)
//   report.json   tables, rankings and artifact references
// plus experiment-specific artifacts (traces/, scatter.csv, predictions.csv, grid_surface.json).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/error.hpp"
#include "windcast/forecaster.hpp"
#include "windcast/outlier_filter.hpp"
#include "windcast/run_config.hpp"
#include "windcast/scada.hpp"
#include "windcast/search/evaluator.hpp"
#include "windcast/search/friedman.hpp"
#include "windcast/search/grid.hpp"
#include "windcast/search/optimizers.hpp"
#include "windcast/search/space.hpp"
#include "windcast/synth.hpp"

namespace windcast {

namespace fs = std::filesystem;

enum class ExperimentKind { model_comparison, outlier_ablation, horizon_comparison, optimizer_comparison };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::model_comparison: return "model-comparison";
    case ExperimentKind::outlier_ablation: return "outlier-ablation";
    case ExperimentKind::horizon_comparison: return "horizon-comparison";
    case ExperimentKind::optimizer_comparison: return "optimizer-comparison";
  }
  return "?";
}

inline ExperimentKind experiment_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::model_comparison, ExperimentKind::outlier_ablation,
                 ExperimentKind::horizon_comparison, ExperimentKind::optimizer_comparison})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::usage, "unknown experiment '" + s +
                                    "' (model-comparison, outlier-ablation, horizon-comparison, optimizer-comparison)");
}

struct Dataset {
  ScadaSeries series;
  std::vector<std::size_t> labeled_outliers;  // synthetic data only
  bool synthetic = false;
};

/// The configured CSV, or synthetic data generated with `seed`.
inline Dataset load_dataset(const RunConfig& cfg, std::uint64_t seed) {
  Dataset d;
  if (!cfg.data.csv.empty()) {
    d.series = parse_csv(cfg.data.csv, cfg.data.columns, cfg.data.cadence);
    return d;
  }
  SynthConfig sc = cfg.synth;
  sc.seed = seed;
  auto syn = generate(cfg.turbine, sc);
  d.series = std::move(syn.series);
  d.labeled_outliers = std::move(syn.outliers);
  d.synthetic = true;
  return d;
}

struct TrainOutcome {
  ForecasterConfig config;
  double val_rmse = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  MetricReport metrics;
};

inline TrainOutcome train_and_score(const ForecasterConfig& cfg, const SupervisedSet& set) {
  const TrainedForecaster m = train(cfg, set);
  return {cfg, m.best_val_rmse, m.best_epoch, static_cast<int>(m.history.val_rmse.size()), evaluate(m, set)};
}

inline json to_json(const TrainOutcome& o) {
  return json{{"config", to_json(o.config)},
              {"val_rmse", o.val_rmse},
              {"best_epoch", o.best_epoch},
              {"epochs_run", o.epochs_run},
              {"metrics", to_json(o.metrics)}};
}

/// Memoizes training outcomes per configuration so repeated candidates and
/// the final re-scoring of a search winner do not retrain. Thread-safe.
class TrainingCache {
 public:
  explicit TrainingCache(const SupervisedSet& set) : set_(set) {}

  TrainOutcome get(const ForecasterConfig& cfg) {
    const std::string key = to_json(cfg).dump();
    {
      std::lock_guard lock(mu_);
      if (auto it = done_.find(key); it != done_.end()) return it->second;
    }
    TrainOutcome o = train_and_score(cfg, set_);
    std::lock_guard lock(mu_);
    done_.emplace(key, o);
    return o;
  }

 private:
  const SupervisedSet& set_;
  std::mutex mu_;
  std::map<std::string, TrainOutcome> done_;
};

// ---------------------------------------------------------------------------
// Summary tables

inline json summarize(const std::vector<double>& v) {
  if (v.empty()) return json{{"mean", nullptr}, {"min", nullptr}, {"max", nullptr}, {"std", nullptr}, {"n", 0}};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return json{{"mean", mean},
              {"min", *std::min_element(v.begin(), v.end())},
              {"max", *std::max_element(v.begin(), v.end())},
              {"std", sd},
              {"n", v.size()}};
}

/// MSE/RMSE/MAE/R x train/test, each summarized as mean/min/max/std.
inline json metric_table(const std::vector<MetricReport>& reports) {
  json t;
  auto column = [&](auto pick) {
    std::vector<double> v;
    for (const auto& r : reports)
      if (auto x = pick(r)) v.push_back(*x);
    return summarize(v);
  };
  auto put = [&](const char* name, auto get) {
    t[name]["train"] = column([&](const MetricReport& r) { return get(r.train); });
    t[name]["test"] = column([&](const MetricReport& r) { return get(r.test); });
  };
  put("mse", [](const SplitMetrics& m) { return std::optional<double>(m.mse); });
  put("rmse", [](const SplitMetrics& m) { return std::optional<double>(m.rmse); });
  put("mae", [](const SplitMetrics& m) { return std::optional<double>(m.mae); });
  put("r", [](const SplitMetrics& m) { return m.r; });
  t["test_rmse_kw"] = column([](const MetricReport& r) { return std::optional<double>(r.test_rmse_kw); });
  return t;
}

// ---------------------------------------------------------------------------
// Run directory writer

class RunWriter {
 public:
  explicit RunWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  void text(const std::string& rel, const std::string& content) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
  }

  void json_file(const std::string& rel, const json& j) { text(rel, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
};

namespace detail {

struct ExperimentState {
  const RunConfig& cfg;
  RunWriter& writer;
  json results = json::array();
  json report = json::object();
  std::vector<std::string> artifacts;
};

inline std::uint64_t rep_seed(const RunConfig& cfg, int rep) { return cfg.seed + static_cast<std::uint64_t>(rep); }

inline ScadaSeries prepared_series(const RunConfig& cfg, const Dataset& d, std::uint64_t seed) {
  if (!cfg.experiment.filter_data) return d.series;
  FilterConfig fc = cfg.filter;
  fc.jobs = cfg.jobs;
  return filter_outliers(d.series, fc, seed).kept;
}

inline ForecasterConfig base_config(const RunConfig& cfg, ModelVariant v, std::uint64_t seed) {
  ForecasterConfig f = cfg.forecaster;
  f.variant = v;
  f.seed = seed;
  return f;
}

inline std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline void write_predictions(RunWriter& w, const TrainedForecaster& m, const SupervisedSet& set) {
  std::ostringstream os;
  os << "timestamp,split,measured_kw,predicted_kw\n";
  const auto& range = set.norm_stats.at(Feature::power);
  auto emit = [&](const std::vector<std::size_t>& idx, const char* split) {
    const auto pred = m.predict_kw(set.inputs, idx);
    for (std::size_t k = 0; k < idx.size(); ++k)
      os << set.target_timestamp[idx[k]] << ',' << split << ',' << fmt(inverse_normalize(set.targets[idx[k]], range))
         << ',' << fmt(pred[k]) << '\n';
  };
  emit(set.split.test, "test");
  w.text("predictions.csv", os.str());
}

struct BestModel {
  std::optional<TrainedForecaster> model;
  const SupervisedSet* set = nullptr;
  double val = std::numeric_limits<double>::infinity();
};

/// Trains one grid cell and appends a result row; failures become rows too.
inline std::optional<TrainOutcome> grid_cell(ExperimentState& st, json row, const ForecasterConfig& fc,
                                             const SupervisedSet& set, BestModel* best) {
  try {
    TrainedForecaster m = train(fc, set);
    TrainOutcome o{fc, m.best_val_rmse, m.best_epoch, static_cast<int>(m.history.val_rmse.size()), evaluate(m, set)};
    row.update(to_json(o));
    row["failed"] = false;
    st.results.push_back(row);
    if (best && o.val_rmse < best->val) {
      best->val = o.val_rmse;
      best->model = std::move(m);
      best->set = &set;
    }
    return o;
  } catch (const Error& e) {
    row["config"] = to_json(fc);
    row["failed"] = true;
    row["error"] = e.what();
    st.results.push_back(row);
    return std::nullopt;
  }
}

inline void model_comparison(ExperimentState& st) {
  const RunConfig& cfg = st.cfg;
  const auto& ex = cfg.experiment;
  std::map<ModelVariant, std::vector<MetricReport>> per_model;
  std::map<ModelVariant, std::vector<double>> val_per_model;
  std::vector<std::vector<double>> scores;  // rows = (seed, bs, lr), cols = variants
  json surface = json::array();
  BestModel best;
  std::vector<std::unique_ptr<SupervisedSet>> sets;

  for (int rep = 0; rep < ex.seeds; ++rep) {
    const std::uint64_t seed = rep_seed(cfg, rep);
    const Dataset d = load_dataset(cfg, seed);
    const ScadaSeries series = prepared_series(cfg, d, seed);
    std::map<ModelVariant, const SupervisedSet*> by_variant;
    for (ModelVariant v : ex.variants) {
      sets.push_back(std::make_unique<SupervisedSet>(
          build_supervised(series, v, cfg.forecaster.lookback, cfg.forecaster.horizon, seed, cfg.data.split)));
      by_variant[v] = sets.back().get();
    }
    for (int bs : ex.bs_grid) {
      for (double lr : ex.lr_grid) {
        std::vector<double> row_scores;
        for (ModelVariant v : ex.variants) {
          ForecasterConfig fc = base_config(cfg, v, seed);
          fc.batch_size = bs;
          fc.learning_rate = lr;
          json row{{"seed", seed}, {"variant", variant_name(v)}, {"batch_size", bs}, {"learning_rate", lr}};
          auto o = grid_cell(st, row, fc, *by_variant[v], &best);
          row_scores.push_back(o ? o->metrics.test.rmse : std::nan(""));
          if (o) {
            per_model[v].push_back(o->metrics);
            val_per_model[v].push_back(o->val_rmse);
            if (rep == 0 && v == ex.variants.front()) {
              const auto& m = o->metrics.validation;
              surface.push_back(json{{"bs", bs}, {"lr", lr}, {"mse", m.mse}, {"r", m.r ? json(*m.r) : json(nullptr)}});
            }
          }
        }
        scores.push_back(row_scores);
      }
    }
  }

  json tables = json::object();
  for (ModelVariant v : ex.variants) {
    tables[variant_name(v)] = metric_table(per_model[v]);
    tables[variant_name(v)]["val_rmse"] = summarize(val_per_model[v]);
  }
  st.report["tables"] = tables;
  if (ex.variants.size() >= 2 && scores.size() >= 2) {
    const auto fr = search::friedman_ranks(scores);
    json ranks = json::object();
    for (std::size_t j = 0; j < ex.variants.size(); ++j) ranks[variant_name(ex.variants[j])] = fr.mean_ranks[j];
    st.report["friedman"] = json{{"score", "test_rmse"},
                                 {"mean_ranks", ranks},
                                 {"rank_vector", fr.mean_ranks},
                                 {"chi_square", fr.chi_square},
                                 {"rows_used", fr.rows_used},
                                 {"excluded_rows", fr.excluded_rows}};
  }
  st.writer.json_file("grid_surface.json", surface);
  st.artifacts.push_back("grid_surface.json");
  if (best.model) {
    write_predictions(st.writer, *best.model, *best.set);
    st.artifacts.push_back("predictions.csv");
  }
}

inline void outlier_ablation(ExperimentState& st) {
  const RunConfig& cfg = st.cfg;
  const auto& ex = cfg.experiment;
  std::map<std::string, std::vector<MetricReport>> per_data;
  json per_seed = json::array();
  int filtered_better = 0;
  BestModel best;
  std::vector<std::unique_ptr<SupervisedSet>> sets;

  for (int rep = 0; rep < ex.seeds; ++rep) {
    const std::uint64_t seed = rep_seed(cfg, rep);
    const Dataset d = load_dataset(cfg, seed);
    FilterConfig fc = cfg.filter;
    fc.jobs = cfg.jobs;
    const FilterResult fr = filter_outliers(d.series, fc, seed);

    json filter_summary{{"input", d.series.size()}, {"kept", fr.report.kept.size()}, {"removed", fr.report.removed.size()}};
    if (d.synthetic) {
      const std::set<std::size_t> removed(fr.report.removed.begin(), fr.report.removed.end());
      std::size_t hit = 0;
      for (std::size_t i : d.labeled_outliers) hit += removed.count(i);
      const std::size_t inliers = d.series.size() - d.labeled_outliers.size();
      filter_summary["labeled_outliers"] = d.labeled_outliers.size();
      filter_summary["recall"] = d.labeled_outliers.empty() ? json(nullptr) : json(double(hit) / double(d.labeled_outliers.size()));
      filter_summary["inlier_false_removal"] = inliers ? json(double(removed.size() - hit) / double(inliers)) : json(nullptr);
    }

    if (rep == 0) {
      std::ostringstream os;
      os << "timestamp,wind_speed,power_kw,removed,cluster,labeled_outlier\n";
      const std::set<std::size_t> labels(d.labeled_outliers.begin(), d.labeled_outliers.end());
      const std::set<std::size_t> removed(fr.report.removed.begin(), fr.report.removed.end());
      for (std::size_t i = 0; i < d.series.size(); ++i) {
        const auto& r = d.series.records[i];
        os << r.timestamp << ',' << fmt(r.wind_speed) << ',' << fmt(r.power) << ',' << removed.count(i) << ','
           << fr.assignments[i] << ',' << labels.count(i) << '\n';
      }
      st.writer.text("scatter.csv", os.str());
      st.artifacts.push_back("scatter.csv");
    }

    const ModelVariant v = ex.ablation_variant;
    sets.push_back(std::make_unique<SupervisedSet>(
        build_supervised(d.series, v, cfg.forecaster.lookback, cfg.forecaster.horizon, seed, cfg.data.split)));
    const SupervisedSet& raw_set = *sets.back();
    sets.push_back(std::make_unique<SupervisedSet>(
        build_supervised(fr.kept, v, cfg.forecaster.lookback, cfg.forecaster.horizon, seed, cfg.data.split)));
    const SupervisedSet& filtered_set = *sets.back();
    filter_summary["raw_windows"] = raw_set.size();
    filter_summary["filtered_windows"] = filtered_set.size();

    std::vector<double> raw_kw, filtered_kw;
    for (int bs : ex.bs_grid) {
      for (double lr : ex.lr_grid) {
        ForecasterConfig f = base_config(cfg, v, seed);
        f.batch_size = bs;
        f.learning_rate = lr;
        for (const auto& [label, set] : {std::pair<const char*, const SupervisedSet*>{"raw", &raw_set},
                                         std::pair<const char*, const SupervisedSet*>{"filtered", &filtered_set}}) {
          json row{{"seed", seed}, {"data", label}, {"variant", variant_name(v)}, {"batch_size", bs}, {"learning_rate", lr}};
          auto o = grid_cell(st, row, f, *set, std::string(label) == "filtered" ? &best : nullptr);
          if (!o) continue;
          per_data[label].push_back(o->metrics);
          (std::string(label) == "raw" ? raw_kw : filtered_kw).push_back(o->metrics.test_rmse_kw);
        }
      }
    }
    auto mean = [](const std::vector<double>& x) {
      double s = 0.0;
      for (double y : x) s += y;
      return x.empty() ? std::nan("") : s / static_cast<double>(x.size());
    };
    const double mr = mean(raw_kw), mf = mean(filtered_kw);
    const bool better = mf < mr;
    filtered_better += better;
    per_seed.push_back(json{{"seed", seed},
                            {"filter", filter_summary},
                            {"raw_test_rmse_kw", std::isfinite(mr) ? json(mr) : json(nullptr)},
                            {"filtered_test_rmse_kw", std::isfinite(mf) ? json(mf) : json(nullptr)},
                            {"filtered_better", better}});
  }
  st.report["tables"] = json{{"raw", metric_table(per_data["raw"])}, {"filtered", metric_table(per_data["filtered"])}};
  st.report["per_seed"] = per_seed;
  st.report["comparison"] = "mean test RMSE in kW over the configuration grid";
  st.report["filtered_better_seeds"] = filtered_better;
  if (best.model) {
    write_predictions(st.writer, *best.model, *best.set);
    st.artifacts.push_back("predictions.csv");
  }
}

inline void horizon_comparison(ExperimentState& st) {
  const RunConfig& cfg = st.cfg;
  const auto& ex = cfg.experiment;
  std::map<std::string, std::vector<MetricReport>> cells;
  BestModel best;
  std::vector<std::unique_ptr<SupervisedSet>> sets;
  for (int rep = 0; rep < ex.seeds; ++rep) {
    const std::uint64_t seed = rep_seed(cfg, rep);
    const Dataset d = load_dataset(cfg, seed);
    const ScadaSeries series = prepared_series(cfg, d, seed);
    for (ModelVariant v : ex.variants) {
      for (std::size_t h : ex.horizons) {
        sets.push_back(std::make_unique<SupervisedSet>(
            build_supervised(series, v, cfg.forecaster.lookback, h, seed, cfg.data.split)));
        const SupervisedSet& set = *sets.back();
        for (int bs : ex.bs_grid) {
          for (double lr : ex.lr_grid) {
            ForecasterConfig f = base_config(cfg, v, seed);
            f.horizon = h;
            f.batch_size = bs;
            f.learning_rate = lr;
            json row{{"seed", seed}, {"variant", variant_name(v)}, {"horizon", h}, {"batch_size", bs}, {"learning_rate", lr}};
            if (auto o = grid_cell(st, row, f, set, h == ex.horizons.front() ? &best : nullptr))
              cells[variant_name(v) + "/H" + std::to_string(h)].push_back(o->metrics);
          }
        }
      }
    }
  }
  json tables = json::object();
  for (const auto& [key, reports] : cells) tables[key] = metric_table(reports);
  st.report["tables"] = tables;
  if (best.model) {
    write_predictions(st.writer, *best.model, *best.set);
    st.artifacts.push_back("predictions.csv");
  }
}

inline void optimizer_comparison(ExperimentState& st) {
  const RunConfig& cfg = st.cfg;
  const auto& ex = cfg.experiment;
  const auto& sc = cfg.search;
  const search::SearchSpace space = search::lstm_space();
  std::map<std::string, std::vector<MetricReport>> per_opt;
  std::map<std::string, std::vector<double>> fitness_per_opt;
  json per_seed = json::array();
  int sade_le_grid = 0;
  BestModel best;

  for (int rep = 0; rep < ex.seeds; ++rep) {
    const std::uint64_t seed = rep_seed(cfg, rep);
    const Dataset d = load_dataset(cfg, seed);
    const ScadaSeries series = prepared_series(cfg, d, seed);
    const SupervisedSet set =
        build_supervised(series, ex.optimizer_variant, cfg.forecaster.lookback, cfg.forecaster.horizon, seed, cfg.data.split);
    TrainingCache cache(set);
    ForecasterConfig base = base_config(cfg, ex.optimizer_variant, seed);
    base.max_epochs = sc.max_epochs;
    search::FitnessFn fitness = [&](const std::vector<double>& values) {
      return cache.get(search::apply_values(space, values, base)).val_rmse;
    };

    json seed_row{{"seed", seed}};
    auto record = [&](const std::string& name, const search::SearchTrace& trace, const ForecasterConfig& winner) {
      std::ostringstream csv;
      search::write_trace_csv(csv, trace);
      const std::string stem = "traces/" + name + "_seed" + std::to_string(seed);
      st.writer.text(stem + ".csv", csv.str());
      st.writer.json_file(stem + ".json", search::to_json(trace));
      st.artifacts.push_back(stem + ".csv");
      st.artifacts.push_back(stem + ".json");
      json row{{"seed", seed}, {"optimizer", name}, {"evaluations", trace.evaluations}, {"failures", trace.failures},
               {"trace", stem + ".json"}};
      if (!std::isfinite(trace.best.fitness)) {
        row["failed"] = true;
        st.results.push_back(row);
        seed_row[name] = nullptr;
        return;
      }
      const TrainOutcome o = cache.get(winner);
      row.update(to_json(o));
      row["failed"] = false;
      st.results.push_back(row);
      per_opt[name].push_back(o.metrics);
      fitness_per_opt[name].push_back(trace.best.fitness);
      seed_row[name] = trace.best.fitness;
    };

    // Grid search over batch size and learning rate with the fixed baseline settings.
    ForecasterConfig fixed = base;
    fixed.num_layers = 1;
    fixed.hidden1 = 100;
    fixed.optimizer = nn::OptimizerKind::adam;
    const auto grid = search::grid_search(sc.bs_grid, sc.lr_grid, fixed,
                                          [&](const ForecasterConfig& c) { return cache.get(c).val_rmse; });
    record("grid", search::grid_trace(grid), grid.front().config);
    if (rep == 0) {
      json surface = json::array();
      for (const auto& g : grid) {
        if (g.failed) continue;
        const auto m = cache.get(g.config).metrics.validation;
        surface.push_back(json{{"bs", g.config.batch_size}, {"lr", g.config.learning_rate}, {"mse", m.mse},
                               {"r", m.r ? json(*m.r) : json(nullptr)}});
      }
      st.writer.json_file("grid_surface.json", surface);
      st.artifacts.push_back("grid_surface.json");
    }

    const int gens = static_cast<int>(sc.budget);
    search::DeOptions de{sc.population, sc.de_f, sc.de_cr, gens, sc.budget, seed, {}, cfg.jobs};
    const auto de_trace = search::de_optimize(space, fitness, de);
    record("de", de_trace, search::apply_values(space, de_trace.best.values, base));

    search::GwoOptions gwo{sc.population, gens, sc.budget, seed, cfg.jobs};
    const auto gwo_trace = search::gwo_optimize(space, fitness, gwo);
    record("gwo", gwo_trace, search::apply_values(space, gwo_trace.best.values, base));

    search::SadeOptions so;
    so.np = sc.population;
    so.max_gens = gens;
    so.budget = sc.budget;
    so.seed = seed;
    so.local_search = sc.local_search;
    so.jobs = cfg.jobs;
    const auto sade_trace = search::sade_optimize(space, fitness, so);
    record("sade", sade_trace, search::apply_values(space, sade_trace.best.values, base));

    if (seed_row.contains("sade") && seed_row.contains("grid") && !seed_row["sade"].is_null() &&
        !seed_row["grid"].is_null()) {
      const bool ok = seed_row["sade"].get<double>() <= seed_row["grid"].get<double>();
      seed_row["sade_le_grid"] = ok;
      sade_le_grid += ok;
    }
    per_seed.push_back(seed_row);

    const ForecasterConfig winner = search::apply_values(space, sade_trace.best.values, base);
    if (std::isfinite(sade_trace.best.fitness) && sade_trace.best.fitness < best.val) {
      best.val = sade_trace.best.fitness;
      best.model = train(winner, set);
      write_predictions(st.writer, *best.model, set);
    }
  }
  json tables = json::object();
  for (const char* name : {"grid", "de", "gwo", "sade"}) {
    tables[name] = metric_table(per_opt[name]);
    tables[name]["val_rmse"] = summarize(fitness_per_opt[name]);
  }
  st.report["tables"] = tables;
  st.report["per_seed"] = per_seed;
  st.report["sade_le_grid_seeds"] = sade_le_grid;
  st.report["budget"] = sc.budget;
  if (best.model) st.artifacts.push_back("predictions.csv");
}

}  // namespace detail

inline fs::path run_directory(const RunConfig& cfg) { return fs::path(cfg.out_dir) / cfg.run_id; }

/// Runs one experiment and writes its run directory. A failing stage keeps
/// the results gathered so far and marks the report incomplete.
inline json run_experiment(ExperimentKind kind, const RunConfig& cfg) {
  validate(cfg);
  if (kind == ExperimentKind::optimizer_comparison &&
      cfg.search.bs_grid.size() * cfg.search.lr_grid.size() > cfg.search.budget)
    throw Error(ErrorKind::usage, "search grid has more points than the evaluation budget");
  RunWriter writer(run_directory(cfg));
  writer.json_file("config.json", to_json(cfg));
  detail::ExperimentState st{cfg, writer, json::array(), json::object(), {}};
  st.report["kind"] = to_string(kind);
  st.report["run_id"] = cfg.run_id;
  st.report["seed"] = cfg.seed;
  st.report["seeds"] = cfg.experiment.seeds;
  bool complete = true;
  try {
    switch (kind) {
      case ExperimentKind::model_comparison: detail::model_comparison(st); break;
      case ExperimentKind::outlier_ablation: detail::outlier_ablation(st); break;
      case ExperimentKind::horizon_comparison: detail::horizon_comparison(st); break;
      case ExperimentKind::optimizer_comparison: detail::optimizer_comparison(st); break;
    }
  } catch (const std::exception& e) {
    complete = false;
    st.report["error"] = e.what();
  }
  st.report["complete"] = complete;
  st.report["results_file"] = "results.json";
  st.report["n_results"] = st.results.size();
  st.report["artifacts"] = st.artifacts;
  writer.json_file("results.json", st.results);
  writer.json_file("report.json", st.report);
  return st.report;
}

// ---------------------------------------------------------------------------
// Plot data

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    for (auto c : split_csv_line(line)) cells.emplace_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline json read_json(const fs::path& p) {
  std::ifstream in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, "cannot parse '" + p.string() + "': " + e.what());
  }
}

}  // namespace detail

/// Tidy CSVs behind the figures, written to <run_dir>/plots/. Returns the files written.
inline std::vector<std::string> report_plots(const fs::path& run_dir) {
  if (!fs::exists(run_dir / "report.json"))
    throw Error(ErrorKind::no_data, "'" + run_dir.string() + "' holds no experiment report");
  RunWriter w(run_dir / "plots");
  std::vector<std::string> written;

  if (fs::exists(run_dir / "scatter.csv")) {
    const auto rows = detail::read_csv_rows(run_dir / "scatter.csv");
    std::ostringstream os;
    os << "wind_speed,power_kw,removed\n";
    for (std::size_t i = 1; i < rows.size(); ++i) os << rows[i][1] << ',' << rows[i][2] << ',' << rows[i][3] << '\n';
    w.text("power_curve_scatter.csv", os.str());
    written.push_back("power_curve_scatter.csv");
  }
  if (fs::exists(run_dir / "grid_surface.json")) {
    std::ostringstream os;
    os << "bs,lr,mse,r\n";
    for (const auto& c : detail::read_json(run_dir / "grid_surface.json")) {
      os << c.at("bs").get<int>() << ',' << detail::fmt(c.at("lr").get<double>()) << ','
         << detail::fmt(c.at("mse").get<double>()) << ',';
      if (!c.at("r").is_null()) os << detail::fmt(c.at("r").get<double>());
      os << '\n';
    }
    w.text("grid_surface.csv", os.str());
    written.push_back("grid_surface.csv");
  }
  if (fs::exists(run_dir / "traces")) {
    std::vector<fs::path> traces;
    for (const auto& e : fs::directory_iterator(run_dir / "traces"))
      if (e.path().extension() == ".json") traces.push_back(e.path());
    std::sort(traces.begin(), traces.end());
    std::ostringstream os;
    os << "trace,algorithm,generation,best,mean,evals\n";
    for (const auto& p : traces) {
      const json t = detail::read_json(p);
      for (const auto& r : t.at("generations")) {
        os << p.stem().string() << ',' << t.at("algorithm").get<std::string>() << ',' << r.at("generation").get<int>() << ',';
        if (!r.at("best").is_null()) os << detail::fmt(r.at("best").get<double>());
        os << ',';
        if (!r.at("mean").is_null()) os << detail::fmt(r.at("mean").get<double>());
        os << ',' << r.at("evals").get<std::size_t>() << '\n';
      }
    }
    if (!traces.empty()) {
      w.text("convergence.csv", os.str());
      written.push_back("convergence.csv");
    }
  }
  if (fs::exists(run_dir / "predictions.csv")) {
    const auto rows = detail::read_csv_rows(run_dir / "predictions.csv");
    std::ostringstream os;
    os << "timestamp,measured_kw,predicted_kw\n";
    for (std::size_t i = 1; i < rows.size(); ++i) os << rows[i][0] << ',' << rows[i][2] << ',' << rows[i][3] << '\n';
    w.text("predicted_vs_measured.csv", os.str());
    written.push_back("predicted_vs_measured.csv");
  }
  if (written.empty()) throw Error(ErrorKind::no_data, "'" + run_dir.string() + "' has no plottable results");
  return written;
}

}  // namespace windcast
