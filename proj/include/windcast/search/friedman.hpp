#pragma once

// Friedman ranking of k models over n configurations (rows).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "windcast/error.hpp"

namespace windcast::search {

struct FriedmanResult {
  std::vector<double> mean_ranks;  // one per model, 1 = best
  double chi_square = 0.0;
  std::size_t rows_used = 0;
  std::vector<std::size_t> excluded_rows;  // rows containing NaN
};

/// Ascending ranks of one row with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& row) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  std::vector<double> ranks(row.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && row[idx[j + 1]] == row[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline FriedmanResult friedman_ranks(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) throw Error(ErrorKind::parameter, "Friedman ranking needs at least 2 configurations");
  const std::size_t k = scores.front().size();
  if (k < 2) throw Error(ErrorKind::parameter, "Friedman ranking needs at least 2 models");
  FriedmanResult res;
  res.mean_ranks.assign(k, 0.0);
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (scores[r].size() != k) throw Error(ErrorKind::dimension, "ragged score matrix");
    if (std::any_of(scores[r].begin(), scores[r].end(), [](double v) { return std::isnan(v); })) {
      res.excluded_rows.push_back(r);
      continue;
    }
    const auto ranks = average_ranks(scores[r]);
    for (std::size_t j = 0; j < k; ++j) res.mean_ranks[j] += ranks[j];
    ++res.rows_used;
  }
  if (res.rows_used < 2) throw Error(ErrorKind::insufficient_data, "fewer than 2 complete rows to rank");
  const double n = static_cast<double>(res.rows_used);
  const double kd = static_cast<double>(k);
  double sum_sq = 0.0;
  for (double& m : res.mean_ranks) {
    m /= n;
    sum_sq += m * m;
  }
  res.chi_square = 12.0 * n / (kd * (kd + 1.0)) * (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
  if (std::abs(res.chi_square) < 1e-12) res.chi_square = 0.0;
  return res;
}

}  // namespace windcast::search
