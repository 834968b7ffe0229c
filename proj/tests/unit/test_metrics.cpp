#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "windcast/metrics.hpp"
#include "windcast/rng.hpp"

using namespace windcast;

namespace {

// Textbook formulas in long double with the raw-sum form of Pearson's R.
struct Oracle {
  long double mae, rmse, r;
};

Oracle oracle(const std::vector<double>& p, const std::vector<double>& o) {
  const long double n = static_cast<long double>(p.size());
  long double abs_sum = 0, sq_sum = 0, sp = 0, so = 0, spp = 0, soo = 0, spo = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double a = p[i], b = o[i];
    abs_sum += std::fabs(a - b);
    sq_sum += (a - b) * (a - b);
    sp += a;
    so += b;
    spp += a * a;
    soo += b * b;
    spo += a * b;
  }
  const long double r = (n * spo - sp * so) / std::sqrt((n * spp - sp * sp) * (n * soo - so * so));
  return {abs_sum / n, std::sqrt(sq_sum / n), r};
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
  const std::vector<double> v = {0.1, 0.5, 0.9, 0.3};
  const auto m = compute_metrics(v, v);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  ASSERT_TRUE(m.r.has_value());
  EXPECT_DOUBLE_EQ(*m.r, 1.0);
}

TEST(Metrics, HandComputedExample) {
  const std::vector<double> p = {1, 2, 3}, o = {2, 4, 6};
  const auto m = compute_metrics(p, o);
  EXPECT_DOUBLE_EQ(m.mae, 2.0);
  EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(14.0 / 3.0));
  EXPECT_DOUBLE_EQ(m.mse, 14.0 / 3.0);
  EXPECT_NEAR(m.rmse, 2.1602, 1e-4);
}

TEST(Metrics, PerfectNegativeCorrelation) {
  const std::vector<double> p = {1, 2, 3}, o = {3, 2, 1};
  const auto m = compute_metrics(p, o);
  ASSERT_TRUE(m.r.has_value());
  EXPECT_DOUBLE_EQ(*m.r, -1.0);
}

TEST(Metrics, ZeroVarianceLeavesRUndefined) {
  const std::vector<double> p = {0.5, 0.5, 0.5}, o = {0.1, 0.2, 0.3};
  EXPECT_FALSE(compute_metrics(p, o).r.has_value());
  EXPECT_FALSE(compute_metrics(o, p).r.has_value());
}

TEST(Metrics, MismatchedLengthsAndEmpty) {
  const std::vector<double> a = {1, 2}, b = {1};
  EXPECT_THROW(compute_metrics(a, b), Error);
  EXPECT_THROW(compute_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Metrics, MatchesIndependentOracle) {
  Rng rng = make_rng(2024, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 200);
    std::vector<double> p(n), o(n);
    for (std::size_t i = 0; i < n; ++i) {
      o[i] = uniform01(rng);
      p[i] = 0.7 * o[i] + 0.3 * uniform01(rng);
    }
    const auto m = compute_metrics(p, o);
    const auto ref = oracle(p, o);
    EXPECT_NEAR(m.mae, static_cast<double>(ref.mae), 1e-12);
    EXPECT_NEAR(m.rmse, static_cast<double>(ref.rmse), 1e-12);
    EXPECT_NEAR(m.mse, m.rmse * m.rmse, 1e-12);
    ASSERT_TRUE(m.r.has_value());
    EXPECT_NEAR(*m.r, static_cast<double>(ref.r), 1e-12);
  }
}
