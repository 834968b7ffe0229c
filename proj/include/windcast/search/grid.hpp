#pragma once

// Exhaustive batch-size x learning-rate grid over a fixed base configuration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/forecaster.hpp"
#include "windcast/search/evaluator.hpp"

namespace windcast::search {

struct GridResult {
  ForecasterConfig config;
  double fitness = kFailed;
  bool failed = false;
  std::size_t order = 0;  // position in evaluation order
};

using ConfigFitnessFn = std::function<double(const ForecasterConfig&)>;

/// Evaluates every (batch size, learning rate) pair, batch size outermost, and
/// returns the results sorted ascending by fitness (stable, failures last).
inline std::vector<GridResult> grid_search(const std::vector<int>& bs_grid, const std::vector<double>& lr_grid,
                                           const ForecasterConfig& fixed, const ConfigFitnessFn& fn) {
  if (bs_grid.empty() || lr_grid.empty()) throw Error(ErrorKind::parameter, "grid axes must be non-empty");
  std::vector<GridResult> out;
  for (int bs : bs_grid) {
    for (double lr : lr_grid) {
      GridResult r;
      r.config = fixed;
      r.config.batch_size = bs;
      r.config.learning_rate = lr;
      r.order = out.size();
      try {
        r.fitness = fn(r.config);
      } catch (const std::exception&) {
        r.fitness = kFailed;
      }
      if (!std::isfinite(r.fitness)) r.fitness = kFailed;
      r.failed = !std::isfinite(r.fitness);
      out.push_back(r);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GridResult& a, const GridResult& b) { return a.fitness < b.fitness; });
  return out;
}

/// `n` values spaced evenly in log10 between lo and hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> v;
  if (n == 1) return {lo};
  for (std::size_t i = 0; i < n; ++i)
    v.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * static_cast<double>(i) / static_cast<double>(n - 1)));
  return v;
}

/// Trace of a grid run in evaluation order, for comparison with the optimizers.
inline SearchTrace grid_trace(const std::vector<GridResult>& results) {
  std::vector<GridResult> by_order = results;
  std::sort(by_order.begin(), by_order.end(), [](const GridResult& a, const GridResult& b) { return a.order < b.order; });
  SearchTrace t;
  t.algorithm = "grid";
  double best = kFailed;
  for (const auto& r : by_order) {
    best = std::min(best, r.fitness);
    TraceRow row;
    row.generation = static_cast<int>(r.order);
    row.best = best;
    row.mean = r.fitness;
    row.evaluations = r.order + 1;
    t.rows.push_back(row);
    if (r.failed) ++t.failures;
  }
  t.evaluations = results.size();
  if (!results.empty()) {
    t.best.fitness = results.front().fitness;
    t.best.failed = results.front().failed;
    t.best.values = {static_cast<double>(results.front().config.batch_size), results.front().config.learning_rate};
  }
  return t;
}

}  // namespace windcast::search
