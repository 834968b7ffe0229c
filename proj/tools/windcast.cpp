// windcast: command-line front end for the SCADA forecasting pipeline.
//
// Exit codes: 0 success, 1 internal or data error, 2 usage/config error.
// Global flags may also be set through the environment:
//   WINDCAST_CONFIG, WINDCAST_SEED, WINDCAST_JOBS, WINDCAST_OUT

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "windcast/experiment.hpp"
#include "windcast/forecaster.hpp"
#include "windcast/metrics.hpp"
#include "windcast/outlier_filter.hpp"
#include "windcast/run_config.hpp"
#include "windcast/scada.hpp"
#include "windcast/search/benchmarks.hpp"
#include "windcast/search/grid.hpp"
#include "windcast/search/optimizers.hpp"
#include "windcast/synth.hpp"

namespace {

using namespace windcast;
using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

RunConfig resolve(const Globals& g) {
  RunConfig c;
  if (!g.config.empty()) c = load_run_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = *g.jobs;
  if (g.out) c.out_dir = *g.out;
  validate(c);
  return c;
}

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string default_path(const RunConfig& c, const std::string& given, const std::string& name) {
  if (!given.empty()) return given;
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
}

ScadaSeries read_input(const RunConfig& c, const std::string& input) {
  const std::string path = input.empty() ? c.data.csv : input;
  if (path.empty()) return generate(c.turbine, [&] {
                             SynthConfig s = c.synth;
                             s.seed = c.seed;
                             return s;
                           }())
                         .series;
  return parse_csv(path, c.data.columns, c.data.cadence);
}

json metrics_json(const SplitMetrics& m) { return to_json(m); }

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c, const std::string& output, const std::string& labels) {
  SynthConfig s = c.synth;
  s.seed = c.seed;
  const auto res = generate(c.turbine, s);
  std::ostringstream os;
  write_csv(os, res.series);
  const std::string path = default_path(c, output, "synthetic.csv");
  write_file(path, os.str());
  if (!labels.empty()) {
    std::ostringstream ls;
    ls << "index,timestamp\n";
    for (std::size_t i : res.outliers) ls << i << ',' << res.series.records[i].timestamp << '\n';
    write_file(labels, ls.str());
  }
  std::cout << json{{"output", path}, {"records", res.series.size()}, {"outliers", res.outliers.size()}}.dump()
            << '\n';
  return 0;
}

int cmd_ingest(const RunConfig& c, const std::string& input, const std::string& output) {
  if (input.empty() && c.data.csv.empty()) throw Error(ErrorKind::usage, "ingest needs --input or data.csv");
  const ScadaSeries s = read_input(c, input);
  std::size_t missing = 0;
  for (const auto& g : s.gaps()) missing += static_cast<std::size_t>(std::max<std::int64_t>(0, g.missing_seconds / s.cadence));
  const auto corr = correlation_matrix(s);
  json flagged = json::array();
  for (Feature f : corr.flagged) flagged.push_back(feature_name(f));
  json summary{{"records", s.size()},       {"skipped_rows", s.skipped_rows}, {"cadence", s.cadence},
               {"resorted", s.resorted},    {"gaps", s.gaps().size()},       {"missing_records", missing},
               {"low_correlation", flagged}};
  if (!output.empty()) {
    std::ostringstream os;
    write_csv(os, s);
    write_file(output, os.str());
    summary["output"] = output;
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_filter(const RunConfig& c, const std::string& input, const std::string& output, const std::string& report) {
  const ScadaSeries s = read_input(c, input);
  FilterConfig fc = c.filter;
  fc.jobs = c.jobs;
  const FilterResult r = filter_outliers(s, fc, c.seed);
  std::ostringstream os;
  write_csv(os, r.kept, r.kept_cluster_ids);
  const std::string path = default_path(c, output, "filtered.csv");
  write_file(path, os.str());
  json clusters = json::array();
  for (const auto& cl : r.report.clusters)
    clusters.push_back(json{{"cluster", cl.cluster},
                            {"count", cl.count},
                            {"mean_rmse", cl.mean_rmse},
                            {"threshold", cl.threshold},
                            {"removed", cl.removed},
                            {"passed_through", cl.passed_through}});
  json rep{{"input", r.report.input_count},     {"kept", r.report.kept.size()},
           {"removed", r.report.removed.size()}, {"threshold", to_string(r.report.threshold)},
           {"inertia", r.report.inertia},        {"clusters", clusters},
           {"output", path}};
  if (!report.empty()) write_file(report, rep.dump(2) + "\n");
  rep.erase("clusters");
  std::cout << rep.dump() << '\n';
  return 0;
}

int cmd_train(RunConfig c, const std::string& input, const std::string& model_path, bool filter,
              const std::string& variant, std::optional<std::size_t> horizon) {
  if (!variant.empty()) c.forecaster.variant = variant_from_name(variant);
  if (horizon) c.forecaster.horizon = *horizon;
  c.forecaster.seed = c.seed;
  try {
    c.forecaster.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::usage, e.what());
  }
  ScadaSeries s = read_input(c, input);
  if (filter) {
    FilterConfig fc = c.filter;
    fc.jobs = c.jobs;
    s = filter_outliers(s, fc, c.seed).kept;
  }
  const auto set = build_supervised(s, c.forecaster.variant, c.forecaster.lookback, c.forecaster.horizon, c.seed,
                                    c.data.split);
  const TrainedForecaster m = train(c.forecaster, set);
  const std::string path = default_path(c, model_path, "model.json");
  save(m, path);
  const MetricReport rep = evaluate(m, set);
  json out{{"model", path},
           {"best_epoch", m.best_epoch},
           {"epochs_run", m.history.val_rmse.size()},
           {"best_val_rmse", m.best_val_rmse},
           {"metrics", to_json(rep)},
           {"persistence_test", metrics_json(persistence_metrics(set, set.split.test))}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

search::SearchTrace run_algorithm(const std::string& algo, const search::SearchSpace& space, search::FitnessFn fn,
                                  const RunConfig& c) {
  const auto& sc = c.search;
  const int gens = static_cast<int>(sc.budget);
  if (algo == "sade") {
    search::SadeOptions o;
    o.np = sc.population;
    o.max_gens = gens;
    o.budget = sc.budget;
    o.seed = c.seed;
    o.local_search = sc.local_search;
    o.jobs = c.jobs;
    return search::sade_optimize(space, fn, o);
  }
  if (algo == "de") return search::de_optimize(space, fn, {sc.population, sc.de_f, sc.de_cr, gens, sc.budget, c.seed, {}, c.jobs});
  if (algo == "gwo") return search::gwo_optimize(space, fn, {sc.population, gens, sc.budget, c.seed, c.jobs});
  if (algo == "random") return search::random_search(space, fn, {sc.population, sc.budget, c.seed, c.jobs});
  throw Error(ErrorKind::usage, "unknown algorithm '" + algo + "' (sade, de, gwo, random, grid)");
}

int cmd_tune(RunConfig c, const std::string& algo, const std::string& input, const std::string& bench,
             std::size_t dim, std::optional<std::size_t> budget, const std::string& output) {
  if (budget) c.search.budget = *budget;
  validate(c);
  search::SearchTrace trace;
  json best;
  if (!bench.empty()) {
    if (algo == "grid") throw Error(ErrorKind::usage, "grid search applies to LSTM tuning only");
    search::Benchmark b = [&] {
      try {
        return search::benchmark(bench, dim);
      } catch (const Error& e) {
        throw Error(ErrorKind::usage, e.what());
      }
    }();
    trace = run_algorithm(algo, b.space, b.fn, c);
    best = json{{"benchmark", bench}, {"dim", dim}, {"values", trace.best.values}};
  } else {
    const ScadaSeries s = read_input(c, input);
    const auto set = build_supervised(s, c.forecaster.variant, c.forecaster.lookback, c.forecaster.horizon, c.seed,
                                      c.data.split);
    TrainingCache cache(set);
    ForecasterConfig base = c.forecaster;
    base.seed = c.seed;
    base.max_epochs = c.search.max_epochs;
    const auto space = search::lstm_space();
    ForecasterConfig winner;
    if (algo == "grid") {
      if (c.search.bs_grid.size() * c.search.lr_grid.size() > c.search.budget)
        throw Error(ErrorKind::usage, "search grid has more points than the evaluation budget");
      const auto g = search::grid_search(c.search.bs_grid, c.search.lr_grid, base,
                                         [&](const ForecasterConfig& f) { return cache.get(f).val_rmse; });
      trace = search::grid_trace(g);
      winner = g.front().config;
    } else {
      trace = run_algorithm(algo, space,
                            [&](const std::vector<double>& v) { return cache.get(search::apply_values(space, v, base)).val_rmse; },
                            c);
      winner = search::apply_values(space, trace.best.values, base);
    }
    best = json{{"config", to_json(winner)}};
    if (std::isfinite(trace.best.fitness)) best["outcome"] = to_json(cache.get(winner));
  }
  best["fitness"] = search::finite_or_null(trace.best.fitness);
  best["evaluations"] = trace.evaluations;
  best["failures"] = trace.failures;
  const std::string path = default_path(c, output, "tune_" + algo + ".json");
  write_file(path, json{{"best", best}, {"trace", search::to_json(trace)}}.dump(2) + "\n");
  std::ostringstream csv;
  search::write_trace_csv(csv, trace);
  write_file(fs::path(path).replace_extension(".csv").string(), csv.str());
  best["output"] = path;
  std::cout << best.dump(2) << '\n';
  return std::isfinite(trace.best.fitness) ? 0 : 1;
}

struct Scored {
  std::vector<std::int64_t> timestamps;
  std::vector<double> predicted_kw;
  std::vector<double> measured_kw;  // empty when the input lacks power
};

// Every usable window of `input`, predicted with the checkpoint at `model_path`.
Scored score_file(const RunConfig& c, const std::string& model_path, const std::string& input) {
  const TrainedForecaster m = load(model_path);
  const auto features = variant_features(m.config.variant);
  std::vector<std::string> optional;
  for (const auto& [field, header] : c.data.columns.names) {
    if (field == "timestamp") continue;
    const bool needed = std::any_of(features.begin(), features.end(), [&](Feature f) { return field == feature_name(f); });
    if (!needed) optional.push_back(field);
  }
  ScadaSeries s;
  try {
    s = parse_csv(input, c.data.columns, c.data.cadence, optional);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::schema) throw;
    throw Error(ErrorKind::usage, std::string(e.what()) + " required by " + variant_name(m.config.variant) + " model");
  }
  const bool has_power =
      std::find(s.absent_fields.begin(), s.absent_fields.end(), "power") == s.absent_fields.end();
  const auto set = window_with_stats(s, m.config.variant, m.config.lookback, m.config.horizon, m.norm_stats);
  Scored out;
  out.predicted_kw = m.predict_kw(set.inputs);
  out.timestamps = set.target_timestamp;
  if (has_power) {
    const std::size_t offset = m.config.lookback + m.config.horizon - 1;
    for (std::size_t start : set.window_start) out.measured_kw.push_back(s.records[start + offset].power);
  }
  return out;
}

int cmd_forecast(const RunConfig& c, const std::string& model, const std::string& input, const std::string& output) {
  const Scored sc = score_file(c, model, input);
  std::ostringstream os;
  const bool measured = !sc.measured_kw.empty();
  os << "timestamp,predicted_kw" << (measured ? ",measured_kw" : "") << '\n';
  for (std::size_t i = 0; i < sc.timestamps.size(); ++i) {
    os << sc.timestamps[i] << ',' << num(sc.predicted_kw[i]);
    if (measured) os << ',' << num(sc.measured_kw[i]);
    os << '\n';
  }
  if (output.empty() || output == "-") {
    std::cout << os.str();
  } else {
    write_file(output, os.str());
    std::cerr << "wrote " << sc.timestamps.size() << " predictions to " << output << '\n';
  }
  return 0;
}

Scored read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::empty_data, "'" + path + "' is empty");
  const auto header = detail::split_csv_line(line);
  auto col = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::usage, "predictions file lacks column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cp = col("predicted_kw"), cm = col("measured_kw");
  Scored s;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    auto p = detail::parse_double(cells.at(cp));
    auto m = detail::parse_double(cells.at(cm));
    if (!p || !m) throw Error(ErrorKind::schema, "unparsable prediction row '" + line + "'");
    s.predicted_kw.push_back(*p);
    s.measured_kw.push_back(*m);
  }
  return s;
}

int cmd_evaluate(const RunConfig& c, const std::string& model, const std::string& input,
                 const std::string& predictions, const std::string& output) {
  Scored sc;
  if (!predictions.empty()) {
    sc = read_predictions(predictions);
  } else {
    if (model.empty() || input.empty())
      throw Error(ErrorKind::usage, "evaluate needs --predictions, or --model with --input");
    sc = score_file(c, model, input);
    if (sc.measured_kw.empty()) throw Error(ErrorKind::usage, "input has no power column to score against");
  }
  const SplitMetrics m = compute_metrics(sc.predicted_kw, sc.measured_kw);
  json out = to_json(m);
  out["units"] = "kW";
  if (!output.empty()) write_file(output, out.dump(2) + "\n");
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_experiment(const RunConfig& c, const std::string& kind) {
  const json report = run_experiment(experiment_from_string(kind), c);
  const bool complete = report.at("complete").get<bool>();
  std::cout << json{{"run_dir", run_directory(c).string()},
                    {"complete", complete},
                    {"results", report.at("n_results")}}
                   .dump()
            << '\n';
  if (!complete) std::cerr << "experiment incomplete: " << report.at("error").get<std::string>() << '\n';
  return complete ? 0 : 1;
}

int cmd_report_plots(const std::string& run_dir) {
  const auto files = report_plots(run_dir);
  std::cout << json{{"plots", files}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind turbine power forecasting from SCADA data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration JSON")->envname("WINDCAST_CONFIG");
  app.add_option("--seed", g.seed, "Global seed")->envname("WINDCAST_SEED");
  app.add_option("--jobs", g.jobs, "Parallel workers")->envname("WINDCAST_JOBS")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory")->envname("WINDCAST_OUT");

  std::string input, output, labels, report, model, predictions, variant, algo = "sade", bench, kind, run_dir;
  std::optional<std::size_t> horizon, budget;
  std::size_t dim = 5;
  bool filter = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic SCADA CSV");
  synth->add_option("-o,--output", output, "CSV path (default <out>/synthetic.csv)");
  synth->add_option("--labels", labels, "Write labeled outlier indices here");

  auto* ingest = app.add_subcommand("ingest", "Parse and summarize a SCADA CSV");
  ingest->add_option("-i,--input", input, "Source CSV");
  ingest->add_option("-o,--output", output, "Write the normalized CSV here");

  auto* filt = app.add_subcommand("filter", "Remove outliers with k-means and autoencoders");
  filt->add_option("-i,--input", input, "Source CSV (default: synthetic)");
  filt->add_option("-o,--output", output, "Kept rows CSV (default <out>/filtered.csv)");
  filt->add_option("--report", report, "Per-cluster report JSON");

  auto* tr = app.add_subcommand("train", "Train a forecaster and save a checkpoint");
  tr->add_option("-i,--input", input, "Source CSV (default: synthetic)");
  tr->add_option("-m,--model", model, "Checkpoint path (default <out>/model.json)");
  tr->add_option("--variant", variant, "M1, M2, M3 or M4");
  tr->add_option("--horizon", horizon, "Steps ahead");
  tr->add_flag("--filter", filter, "Filter outliers before training");

  auto* tune = app.add_subcommand("tune", "Hyperparameter search, or an optimizer benchmark");
  tune->add_option("-a,--algorithm", algo, "sade, de, gwo, random or grid");
  tune->add_option("-i,--input", input, "Source CSV (default: synthetic)");
  tune->add_option("--benchmark", bench, "sphere, rastrigin or rosenbrock instead of LSTM tuning");
  tune->add_option("--dim", dim, "Benchmark dimension")->check(CLI::PositiveNumber);
  tune->add_option("--budget", budget, "Fitness evaluation budget");
  tune->add_option("-o,--output", output, "Result JSON (default <out>/tune_<algorithm>.json)");

  auto* fc = app.add_subcommand("forecast", "Predict power for every usable window of a CSV");
  fc->add_option("-m,--model", model, "Checkpoint")->required();
  fc->add_option("-i,--input", input, "Input CSV")->required();
  fc->add_option("-o,--output", output, "Predictions CSV (default stdout)");

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint or a predictions file in kW");
  ev->add_option("-m,--model", model, "Checkpoint");
  ev->add_option("-i,--input", input, "Input CSV");
  ev->add_option("-p,--predictions", predictions, "Predictions CSV from forecast");
  ev->add_option("-o,--output", output, "Metrics JSON");

  auto* ex = app.add_subcommand("experiment", "Run a configured experiment into <out>/<run_id>");
  ex->add_option("kind", kind, "model-comparison, outlier-ablation, horizon-comparison or optimizer-comparison")
      ->required();

  auto* rp = app.add_subcommand("report-plots", "Write plot-ready CSVs for a run directory");
  rp->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*rp) return cmd_report_plots(run_dir);
    const RunConfig c = resolve(g);
    if (*synth) return cmd_synth(c, output, labels);
    if (*ingest) return cmd_ingest(c, input, output);
    if (*filt) return cmd_filter(c, input, output, report);
    if (*tr) return cmd_train(c, input, model, filter, variant, horizon);
    if (*tune) return cmd_tune(c, algo, input, bench, dim, budget, output);
    if (*fc) return cmd_forecast(c, model, input, output);
    if (*ev) return cmd_evaluate(c, model, input, predictions, output);
    if (*ex) return cmd_experiment(c, kind);
  } catch (const Error& e) {
    std::cerr << "windcast: " << e.what() << '\n';
    return e.kind() == ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "windcast: internal error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
