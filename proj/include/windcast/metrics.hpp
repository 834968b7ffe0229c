#pragma once

#include <cmath>
#include <optional>
#include <span>

#include "windcast/error.hpp"

namespace windcast {

/// Forecast accuracy indices. `r` is nullopt when either series has zero
/// variance (Pearson R undefined).
struct SplitMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r;
  std::size_t n = 0;
};

inline SplitMetrics compute_metrics(std::span<const double> predicted,
                                    std::span<const double> observed) {
  if (predicted.size() != observed.size())
    throw Error(ErrorKind::dimension, "predicted and observed lengths differ");
  if (predicted.empty()) throw Error(ErrorKind::empty_data, "metrics of an empty split");
  const double n = static_cast<double>(predicted.size());
  double sum_abs = 0.0, sum_sq = 0.0, mean_p = 0.0, mean_o = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - observed[i];
    sum_abs += std::abs(e);
    sum_sq += e * e;
    mean_p += predicted[i];
    mean_o += observed[i];
  }
  mean_p /= n;
  mean_o /= n;
  double cov = 0.0, var_p = 0.0, var_o = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dp = predicted[i] - mean_p;
    const double dobs = observed[i] - mean_o;
    cov += dp * dobs;
    var_p += dp * dp;
    var_o += dobs * dobs;
  }
  SplitMetrics m;
  m.n = predicted.size();
  m.mae = sum_abs / n;
  m.mse = sum_sq / n;
  m.rmse = std::sqrt(m.mse);
  if (var_p > 0.0 && var_o > 0.0) {
    const double r = (cov / n) / (std::sqrt(var_p / n) * std::sqrt(var_o / n));
    m.r = std::fmax(-1.0, std::fmin(1.0, r));
  }
  return m;
}

}  // namespace windcast
