#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "windcast/search/friedman.hpp"

using namespace windcast;
using namespace windcast::search;

namespace {

// Rank of each entry as 1 + (# strictly smaller) + (# equal others) / 2.
std::vector<double> brute_ranks(const std::vector<double>& row) {
  std::vector<double> out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == i) continue;
      less += row[j] < row[i];
      equal += row[j] == row[i];
    }
    out.push_back(1.0 + less + equal / 2.0);
  }
  return out;
}

}  // namespace

TEST(Friedman, TiesShareAverageRank) {
  EXPECT_EQ(average_ranks({0.3, 0.1, 0.3, 0.2}), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
  EXPECT_EQ(average_ranks({1.0, 1.0, 1.0}), (std::vector<double>{2.0, 2.0, 2.0}));
}

TEST(Friedman, TwoByTwo) {
  const auto r = friedman_ranks({{0.1, 0.2}, {0.1, 0.3}});
  EXPECT_EQ(r.mean_ranks, (std::vector<double>{1.0, 2.0}));
  EXPECT_DOUBLE_EQ(r.chi_square, 2.0);
  EXPECT_EQ(r.rows_used, 2u);
}

TEST(Friedman, RandomMatricesAgainstBruteForce) {
  std::uint64_t state = 77;
  auto next = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>((state >> 40) % 7);  // small range forces ties
  };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6), k = 2 + static_cast<std::size_t>(trial % 4);
    std::vector<std::vector<double>> m(n, std::vector<double>(k));
    for (auto& row : m)
      for (double& v : row) v = next();
    std::vector<double> mean(k, 0.0);
    for (const auto& row : m) {
      const auto br = brute_ranks(row);
      for (std::size_t j = 0; j < k; ++j) mean[j] += br[j] / static_cast<double>(n);
    }
    double chi = 0.0;
    for (double r : mean) chi += (r - (k + 1.0) / 2.0) * (r - (k + 1.0) / 2.0);
    chi *= 12.0 * static_cast<double>(n) / (static_cast<double>(k) * (k + 1.0));
    const auto res = friedman_ranks(m);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(res.mean_ranks[j], mean[j], 1e-12);
    EXPECT_NEAR(res.chi_square, chi, 1e-9);
  }
}

TEST(Friedman, NanRowsExcluded) {
  const auto r = friedman_ranks({{1, 2, 3}, {std::nan(""), 1, 2}, {3, 2, 1}, {1, 3, 2}});
  EXPECT_EQ(r.rows_used, 3u);
  EXPECT_EQ(r.excluded_rows, (std::vector<std::size_t>{1}));
  EXPECT_THROW(friedman_ranks({{1, 2}, {std::nan(""), 1}}), Error);
  EXPECT_THROW(friedman_ranks({{1, 2}, {1}}), Error);
}
