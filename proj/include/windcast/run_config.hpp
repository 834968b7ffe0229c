#pragma once

// Run configuration: one JSON document holding every sub-configuration.
// Missing keys keep their defaults; unknown keys are rejected so typos fail
// loudly instead of silently running the defaults.

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/error.hpp"
#include "windcast/forecaster.hpp"
#include "windcast/outlier_filter.hpp"
#include "windcast/scada.hpp"
#include "windcast/search/grid.hpp"
#include "windcast/search/local_search.hpp"
#include "windcast/synth.hpp"

namespace windcast {

namespace detail {

template <class T>
using FieldSetters = std::map<std::string, std::function<void(T&, const json&)>>;

template <class T>
T read_fields(const json& j, T out, const FieldSetters<T>& fields, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorKind::usage, what + " must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorKind::usage, "unknown key '" + key + "' in " + what);
    try {
      it->second(out, v);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::usage, what + "." + key + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

inline json to_json(const TurbineSpec& s) {
  return json{{"rho", s.rho},         {"rotor_radius", s.rotor_radius}, {"cp", s.cp},
              {"cut_in", s.cut_in},   {"rated", s.rated},               {"cut_out", s.cut_out},
              {"rated_power", s.rated_power}};
}

inline TurbineSpec turbine_from_json(const json& j, TurbineSpec s = {}) {
  static const detail::FieldSetters<TurbineSpec> f = {
      {"rho", [](TurbineSpec& s, const json& v) { s.rho = v.get<double>(); }},
      {"rotor_radius", [](TurbineSpec& s, const json& v) { s.rotor_radius = v.get<double>(); }},
      {"cp", [](TurbineSpec& s, const json& v) { s.cp = v.get<double>(); }},
      {"cut_in", [](TurbineSpec& s, const json& v) { s.cut_in = v.get<double>(); }},
      {"rated", [](TurbineSpec& s, const json& v) { s.rated = v.get<double>(); }},
      {"cut_out", [](TurbineSpec& s, const json& v) { s.cut_out = v.get<double>(); }},
      {"rated_power", [](TurbineSpec& s, const json& v) { s.rated_power = v.get<double>(); }},
  };
  return detail::read_fields(j, s, f, "turbine");
}

inline json to_json(const SynthConfig& c) {
  return json{{"n_records", c.n_records},
              {"cadence", c.cadence},
              {"start_timestamp", c.start_timestamp},
              {"weibull_shape", c.weibull_shape},
              {"weibull_scale", c.weibull_scale},
              {"dominant_direction", c.dominant_direction},
              {"secondary_direction", c.secondary_direction},
              {"dominant_weight", c.dominant_weight},
              {"direction_spread", c.direction_spread},
              {"direction_persistence", c.direction_persistence},
              {"noise_std", c.noise_std},
              {"noise_autocorrelation", c.noise_autocorrelation},
              {"direction_modulation", c.direction_modulation},
              {"outlier_rate", c.outlier_rate},
              {"outlier_kind", to_string(c.outlier_kind)},
              {"outlier_scale", c.outlier_scale},
              {"spinup_fraction", c.spinup_fraction},
              {"seed", c.seed}};
}

inline SynthConfig synth_from_json(const json& j, SynthConfig c = {}) {
  using S = SynthConfig;
  static const detail::FieldSetters<S> f = {
      {"n_records", [](S& c, const json& v) { c.n_records = v.get<std::size_t>(); }},
      {"cadence", [](S& c, const json& v) { c.cadence = v.get<std::int64_t>(); }},
      {"start_timestamp", [](S& c, const json& v) { c.start_timestamp = v.get<std::int64_t>(); }},
      {"weibull_shape", [](S& c, const json& v) { c.weibull_shape = v.get<double>(); }},
      {"weibull_scale", [](S& c, const json& v) { c.weibull_scale = v.get<double>(); }},
      {"dominant_direction", [](S& c, const json& v) { c.dominant_direction = v.get<double>(); }},
      {"secondary_direction", [](S& c, const json& v) { c.secondary_direction = v.get<double>(); }},
      {"dominant_weight", [](S& c, const json& v) { c.dominant_weight = v.get<double>(); }},
      {"direction_spread", [](S& c, const json& v) { c.direction_spread = v.get<double>(); }},
      {"direction_persistence", [](S& c, const json& v) { c.direction_persistence = v.get<double>(); }},
      {"noise_std", [](S& c, const json& v) { c.noise_std = v.get<double>(); }},
      {"noise_autocorrelation", [](S& c, const json& v) { c.noise_autocorrelation = v.get<double>(); }},
      {"direction_modulation", [](S& c, const json& v) { c.direction_modulation = v.get<double>(); }},
      {"outlier_rate", [](S& c, const json& v) { c.outlier_rate = v.get<double>(); }},
      {"outlier_kind", [](S& c, const json& v) { c.outlier_kind = outlier_kind_from_string(v.get<std::string>()); }},
      {"outlier_scale", [](S& c, const json& v) { c.outlier_scale = v.get<double>(); }},
      {"spinup_fraction", [](S& c, const json& v) { c.spinup_fraction = v.get<double>(); }},
      {"seed", [](S& c, const json& v) { c.seed = v.get<std::uint64_t>(); }},
  };
  return detail::read_fields(j, c, f, "synth");
}

inline json to_json(const FilterConfig& c) {
  return json{{"k", c.k},
              {"max_iters", c.max_iters},
              {"hidden_dim", c.autoencoder.hidden_dim},
              {"epochs", c.autoencoder.epochs},
              {"lr", c.autoencoder.lr},
              {"update", nn::to_string(c.autoencoder.update)},
              {"standardize", c.autoencoder.standardize},
              {"linear_output", c.autoencoder.linear_output},
              {"threshold", to_string(c.threshold)},
              {"max_removed_fraction", c.max_removed_fraction},
              {"min_cluster_rows", c.min_cluster_rows}};
}

inline FilterConfig filter_from_json(const json& j, FilterConfig c = {}) {
  using F = FilterConfig;
  static const detail::FieldSetters<F> f = {
      {"k", [](F& c, const json& v) { c.k = v.get<int>(); }},
      {"max_iters", [](F& c, const json& v) { c.max_iters = v.get<int>(); }},
      {"hidden_dim", [](F& c, const json& v) { c.autoencoder.hidden_dim = v.get<int>(); }},
      {"epochs", [](F& c, const json& v) { c.autoencoder.epochs = v.get<int>(); }},
      {"lr", [](F& c, const json& v) { c.autoencoder.lr = v.get<double>(); }},
      {"update", [](F& c, const json& v) { c.autoencoder.update = nn::optimizer_from_string(v.get<std::string>()); }},
      {"standardize", [](F& c, const json& v) { c.autoencoder.standardize = v.get<bool>(); }},
      {"linear_output", [](F& c, const json& v) { c.autoencoder.linear_output = v.get<bool>(); }},
      {"threshold", [](F& c, const json& v) { c.threshold = threshold_mode_from_string(v.get<std::string>()); }},
      {"max_removed_fraction", [](F& c, const json& v) { c.max_removed_fraction = v.get<double>(); }},
      {"min_cluster_rows", [](F& c, const json& v) { c.min_cluster_rows = v.get<std::size_t>(); }},
  };
  return detail::read_fields(j, c, f, "filter");
}

struct DataSettings {
  std::string csv;  // empty: generate synthetic data
  std::int64_t cadence = 600;
  ColumnMap columns;
  SplitMode split = SplitMode::random;
};

struct SearchSettings {
  std::size_t budget = 40;
  std::size_t population = 10;  // SaDE/DE population and GWO pack
  int max_epochs = 30;
  search::LocalSearchMode local_search = search::LocalSearchMode::off;
  double de_f = 0.5;
  double de_cr = 0.9;
  std::vector<int> bs_grid = {128, 256, 512, 1024, 2048};
  std::vector<double> lr_grid = search::log_grid(1e-5, 1e-1, 8);
};

struct ExperimentSettings {
  int seeds = 1;  // repetitions; repetition r uses seed + r
  std::vector<int> bs_grid = {256, 1024};
  std::vector<double> lr_grid = {1e-3, 1e-2};
  std::vector<ModelVariant> variants = {kAllVariants.begin(), kAllVariants.end()};
  std::vector<std::size_t> horizons = {1, 6};
  bool filter_data = false;  // model/horizon/optimizer comparisons on filtered data
  ModelVariant ablation_variant = ModelVariant::M1;
  ModelVariant optimizer_variant = ModelVariant::M3;
};

struct RunConfig {
  std::string run_id = "run";
  std::string out_dir = "runs";
  std::uint64_t seed = 1;
  int jobs = 1;
  DataSettings data;
  TurbineSpec turbine;
  SynthConfig synth;
  FilterConfig filter;
  ForecasterConfig forecaster;
  SearchSettings search;
  ExperimentSettings experiment;
};

inline json to_json(const RunConfig& c) {
  json variants = json::array();
  for (auto v : c.experiment.variants) variants.push_back(variant_name(v));
  return json{
      {"run_id", c.run_id},
      {"out_dir", c.out_dir},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"data", {{"csv", c.data.csv},
                {"cadence", c.data.cadence},
                {"columns", c.data.columns.names},
                {"split", c.data.split == SplitMode::random ? "random" : "chronological"}}},
      {"turbine", to_json(c.turbine)},
      {"synth", to_json(c.synth)},
      {"filter", to_json(c.filter)},
      {"forecaster", to_json(c.forecaster)},
      {"search", {{"budget", c.search.budget},
                  {"population", c.search.population},
                  {"max_epochs", c.search.max_epochs},
                  {"local_search", search::to_string(c.search.local_search)},
                  {"de_f", c.search.de_f},
                  {"de_cr", c.search.de_cr},
                  {"bs_grid", c.search.bs_grid},
                  {"lr_grid", c.search.lr_grid}}},
      {"experiment", {{"seeds", c.experiment.seeds},
                      {"bs_grid", c.experiment.bs_grid},
                      {"lr_grid", c.experiment.lr_grid},
                      {"variants", variants},
                      {"horizons", c.experiment.horizons},
                      {"filter_data", c.experiment.filter_data},
                      {"ablation_variant", variant_name(c.experiment.ablation_variant)},
                      {"optimizer_variant", variant_name(c.experiment.optimizer_variant)}}},
  };
}

inline void validate(const RunConfig& c);

inline RunConfig run_config_from_json(const json& j, RunConfig c = {}) {
  using R = RunConfig;
  static const detail::FieldSetters<DataSettings> data_f = {
      {"csv", [](DataSettings& d, const json& v) { d.csv = v.get<std::string>(); }},
      {"cadence", [](DataSettings& d, const json& v) { d.cadence = v.get<std::int64_t>(); }},
      {"columns", [](DataSettings& d, const json& v) {
         for (const auto& [field, header] : v.items()) {
           if (!d.columns.names.contains(field)) throw Error(ErrorKind::usage, "unknown column field '" + field + "'");
           d.columns.names[field] = header.get<std::string>();
         }
       }},
      {"split", [](DataSettings& d, const json& v) {
         const auto s = v.get<std::string>();
         if (s == "random") d.split = SplitMode::random;
         else if (s == "chronological") d.split = SplitMode::chronological;
         else throw Error(ErrorKind::usage, "data.split must be 'random' or 'chronological'");
       }},
  };
  static const detail::FieldSetters<SearchSettings> search_f = {
      {"budget", [](SearchSettings& s, const json& v) { s.budget = v.get<std::size_t>(); }},
      {"population", [](SearchSettings& s, const json& v) { s.population = v.get<std::size_t>(); }},
      {"max_epochs", [](SearchSettings& s, const json& v) { s.max_epochs = v.get<int>(); }},
      {"local_search", [](SearchSettings& s, const json& v) { s.local_search = search::local_search_from_string(v.get<std::string>()); }},
      {"de_f", [](SearchSettings& s, const json& v) { s.de_f = v.get<double>(); }},
      {"de_cr", [](SearchSettings& s, const json& v) { s.de_cr = v.get<double>(); }},
      {"bs_grid", [](SearchSettings& s, const json& v) { s.bs_grid = v.get<std::vector<int>>(); }},
      {"lr_grid", [](SearchSettings& s, const json& v) { s.lr_grid = v.get<std::vector<double>>(); }},
  };
  static const detail::FieldSetters<ExperimentSettings> exp_f = {
      {"seeds", [](ExperimentSettings& e, const json& v) { e.seeds = v.get<int>(); }},
      {"bs_grid", [](ExperimentSettings& e, const json& v) { e.bs_grid = v.get<std::vector<int>>(); }},
      {"lr_grid", [](ExperimentSettings& e, const json& v) { e.lr_grid = v.get<std::vector<double>>(); }},
      {"variants", [](ExperimentSettings& e, const json& v) {
         e.variants.clear();
         for (const auto& n : v) e.variants.push_back(variant_from_name(n.get<std::string>()));
       }},
      {"horizons", [](ExperimentSettings& e, const json& v) { e.horizons = v.get<std::vector<std::size_t>>(); }},
      {"filter_data", [](ExperimentSettings& e, const json& v) { e.filter_data = v.get<bool>(); }},
      {"ablation_variant", [](ExperimentSettings& e, const json& v) { e.ablation_variant = variant_from_name(v.get<std::string>()); }},
      {"optimizer_variant", [](ExperimentSettings& e, const json& v) { e.optimizer_variant = variant_from_name(v.get<std::string>()); }},
  };
  static const detail::FieldSetters<R> f = {
      {"run_id", [](R& c, const json& v) { c.run_id = v.get<std::string>(); }},
      {"out_dir", [](R& c, const json& v) { c.out_dir = v.get<std::string>(); }},
      {"seed", [](R& c, const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"jobs", [](R& c, const json& v) { c.jobs = v.get<int>(); }},
      {"data", [](R& c, const json& v) { c.data = detail::read_fields(v, c.data, data_f, "data"); }},
      {"turbine", [](R& c, const json& v) { c.turbine = turbine_from_json(v, c.turbine); }},
      {"synth", [](R& c, const json& v) { c.synth = synth_from_json(v, c.synth); }},
      {"filter", [](R& c, const json& v) { c.filter = filter_from_json(v, c.filter); }},
      {"forecaster", [](R& c, const json& v) { c.forecaster = forecaster_config_from_json(v, c.forecaster); }},
      {"search", [](R& c, const json& v) { c.search = detail::read_fields(v, c.search, search_f, "search"); }},
      {"experiment", [](R& c, const json& v) { c.experiment = detail::read_fields(v, c.experiment, exp_f, "experiment"); }},
  };
  c = detail::read_fields(j, c, f, "run config");
  validate(c);
  return c;
}

inline void validate(const RunConfig& c) {
  if (c.run_id.empty() || c.run_id.find('/') != std::string::npos || c.run_id == "." || c.run_id == "..")
    throw Error(ErrorKind::usage, "run_id must be a plain directory name");
  if (c.jobs < 1) throw Error(ErrorKind::usage, "jobs must be >= 1");
  if (c.experiment.seeds < 1) throw Error(ErrorKind::usage, "experiment.seeds must be >= 1");
  if (c.experiment.bs_grid.empty() || c.experiment.lr_grid.empty())
    throw Error(ErrorKind::usage, "experiment grids must be non-empty");
  if (c.search.bs_grid.empty() || c.search.lr_grid.empty())
    throw Error(ErrorKind::usage, "search grids must be non-empty");
  if (c.experiment.variants.empty()) throw Error(ErrorKind::usage, "experiment.variants must be non-empty");
  if (c.experiment.horizons.empty()) throw Error(ErrorKind::usage, "experiment.horizons must be non-empty");
  try {
    c.turbine.validate();
    c.synth.validate();
    c.forecaster.validate();
    ForecasterConfig f = c.forecaster;
    for (int bs : c.experiment.bs_grid) {
      f.batch_size = bs;
      f.validate();
    }
    for (double lr : c.experiment.lr_grid) {
      f.learning_rate = lr;
      f.validate();
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::usage, std::string("invalid configuration: ") + e.what());
  }
  if (c.search.budget < c.search.population || c.search.population < 5)
    throw Error(ErrorKind::usage, "search needs population >= 5 and budget >= population");
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::usage, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace windcast
