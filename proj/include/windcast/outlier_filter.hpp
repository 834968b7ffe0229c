#pragma once

// Two-stage outlier removal: K-means bands in normalized (wind speed, power)
// space, then one autoencoder per band; rows whose reconstruction RMSE is
// strictly above the band mean are removed.

#include <Eigen/Dense>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "windcast/autoencoder.hpp"
#include "windcast/error.hpp"
#include "windcast/kmeans.hpp"
#include "windcast/rng.hpp"
#include "windcast/scada.hpp"

namespace windcast {

enum class ThresholdMode { per_cluster, global };

inline const char* to_string(ThresholdMode m) {
  return m == ThresholdMode::per_cluster ? "per-cluster" : "global";
}

inline ThresholdMode threshold_mode_from_string(const std::string& s) {
  if (s == "per-cluster" || s == "cluster") return ThresholdMode::per_cluster;
  if (s == "global") return ThresholdMode::global;
  throw Error(ErrorKind::usage, "unknown threshold mode '" + s + "'");
}

struct FilterConfig {
  int k = 10;
  int max_iters = 300;
  AutoencoderConfig autoencoder;
  ThresholdMode threshold = ThresholdMode::per_cluster;
  double max_removed_fraction = 0.5;
  std::size_t min_cluster_rows = 10;
  int jobs = 1;
};

struct ClusterFilterStats {
  int cluster = 0;
  std::size_t count = 0;
  double mean_rmse = 0.0;
  double threshold = 0.0;
  std::size_t removed = 0;
  bool passed_through = false;  // too small to train an autoencoder
};

struct FilterReport {
  ThresholdMode threshold = ThresholdMode::per_cluster;
  std::vector<ClusterFilterStats> clusters;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
  std::size_t input_count = 0;
  double inertia = 0.0;
};

struct FilterResult {
  ScadaSeries kept;
  std::vector<int> kept_cluster_ids;
  std::vector<int> assignments;     // cluster per input record
  std::vector<double> row_rmse;     // reconstruction RMSE per input record (0 if passed through)
  FeatureRange speed_range;
  FeatureRange power_range;
  FilterReport report;
};

/// Rows of (wind_speed, power) scaled into [0, 1] over the whole series.
inline Eigen::MatrixXd speed_power_points(const ScadaSeries& series, FeatureRange& speed,
                                          FeatureRange& power) {
  speed = range_of(series.column(Feature::wind_speed));
  power = range_of(series.column(Feature::power));
  require_nondegenerate(speed, "wind_speed");
  require_nondegenerate(power, "power");
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(series.size()), 2);
  for (std::size_t i = 0; i < series.size(); ++i) {
    pts(static_cast<Eigen::Index>(i), 0) = normalize(series.records[i].wind_speed, speed);
    pts(static_cast<Eigen::Index>(i), 1) = normalize(series.records[i].power, power);
  }
  return pts;
}

inline FilterResult filter_outliers(const ScadaSeries& series, const FilterConfig& cfg,
                                    std::uint64_t seed) {
  if (series.empty()) throw Error(ErrorKind::empty_data, "cannot filter an empty series");
  FilterResult res;
  const Eigen::MatrixXd pts = speed_power_points(series, res.speed_range, res.power_range);
  const ClusterModel clusters = kmeans_fit(pts, cfg.k, derive_seed(seed, 1), cfg.max_iters);
  res.assignments = clusters.assignments;
  res.report.inertia = clusters.inertia;
  res.report.threshold = cfg.threshold;
  res.report.input_count = series.size();

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(cfg.k));
  for (std::size_t i = 0; i < series.size(); ++i)
    members[static_cast<std::size_t>(clusters.assignments[i])].push_back(i);

  // Per-cluster reconstruction errors; clusters are independent tasks.
  auto score_cluster = [&](int c) -> std::vector<double> {
    const auto& idx = members[static_cast<std::size_t>(c)];
    if (idx.size() < cfg.min_cluster_rows) return {};
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(idx.size()), 2);
    for (std::size_t j = 0; j < idx.size(); ++j) rows.row(static_cast<Eigen::Index>(j)) = pts.row(static_cast<Eigen::Index>(idx[j]));
    const AutoencoderModel ae = autoencoder_fit(rows, cfg.autoencoder, derive_seed(seed, 100 + static_cast<std::uint64_t>(c)));
    const Eigen::VectorXd e = ae.row_rmse(rows);
    return {e.data(), e.data() + e.size()};
  };
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(cfg.k));
  if (cfg.jobs > 1) {
    for (int start = 0; start < cfg.k; start += cfg.jobs) {
      std::vector<std::future<std::vector<double>>> futs;
      for (int c = start; c < std::min(cfg.k, start + cfg.jobs); ++c)
        futs.push_back(std::async(std::launch::async, score_cluster, c));
      for (int c = start; c < std::min(cfg.k, start + cfg.jobs); ++c)
        errors[static_cast<std::size_t>(c)] = futs[static_cast<std::size_t>(c - start)].get();
    }
  } else {
    for (int c = 0; c < cfg.k; ++c) errors[static_cast<std::size_t>(c)] = score_cluster(c);
  }

  res.row_rmse.assign(series.size(), 0.0);
  double global_sum = 0.0;
  std::size_t global_n = 0;
  for (int c = 0; c < cfg.k; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    const auto& e = errors[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < e.size(); ++j) {
      res.row_rmse[idx[j]] = e[j];
      global_sum += e[j];
      ++global_n;
    }
  }
  const double global_mean = global_n > 0 ? global_sum / static_cast<double>(global_n) : 0.0;

  std::vector<bool> remove(series.size(), false);
  for (int c = 0; c < cfg.k; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    const auto& e = errors[static_cast<std::size_t>(c)];
    ClusterFilterStats st;
    st.cluster = c;
    st.count = idx.size();
    if (e.empty()) {
      st.passed_through = true;
      res.report.clusters.push_back(st);
      continue;
    }
    st.mean_rmse = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    st.threshold = cfg.threshold == ThresholdMode::per_cluster ? st.mean_rmse : global_mean;
    // Summing n equal errors and dividing can land an ulp below each of them,
    // so "above the mean" allows a few ulps of slack.
    const double cut = st.threshold + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(st.threshold);
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (e[j] > cut) {
        remove[idx[j]] = true;
        ++st.removed;
      }
    }
    if (static_cast<double>(st.removed) > cfg.max_removed_fraction * static_cast<double>(st.count))
      throw Error(ErrorKind::numeric, "cluster " + std::to_string(c) + " lost " +
                                          std::to_string(st.removed) + " of " +
                                          std::to_string(st.count) +
                                          " rows; autoencoder looks degenerate");
    res.report.clusters.push_back(st);
  }

  std::vector<ScadaRecord> kept;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (remove[i]) {
      res.report.removed.push_back(i);
    } else {
      res.report.kept.push_back(i);
      kept.push_back(series.records[i]);
      res.kept_cluster_ids.push_back(res.assignments[i]);
    }
  }
  res.kept = ScadaSeries(std::move(kept), series.cadence);
  return res;
}

}  // namespace windcast
