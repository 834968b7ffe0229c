#include <gtest/gtest.h>

#include "windcast/kmeans.hpp"

using namespace windcast;

TEST(KMeans, SingleClusterIsMean) {
  Eigen::MatrixXd pts(5, 2);
  pts << 0.1, 0.2, 0.4, 0.9, 0.3, 0.3, 0.8, 0.1, 0.5, 0.5;
  const auto m = kmeans_fit(pts, 1, 3);
  EXPECT_NEAR(m.centroids(0, 0), pts.col(0).mean(), 1e-15);
  EXPECT_NEAR(m.centroids(0, 1), pts.col(1).mean(), 1e-15);
}

TEST(KMeans, TwoPointsTwoClusters) {
  Eigen::MatrixXd pts(2, 2);
  pts << 0.1, 0.1, 0.9, 0.8;
  const auto m = kmeans_fit(pts, 2, 1);
  EXPECT_EQ(m.inertia, 0.0);
  EXPECT_NE(m.assignments[0], m.assignments[1]);
  for (int i = 0; i < 2; ++i) EXPECT_EQ((m.centroids.row(m.assignments[i]) - pts.row(i)).norm(), 0.0);
}

TEST(KMeans, ThreeBlobsRecovered) {
  const double centres[3][2] = {{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}};
  Rng rng = make_rng(17);
  const int per = 100;
  Eigen::MatrixXd pts(3 * per, 2);
  std::vector<int> truth(3 * per);
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < per; ++i) {
      pts(b * per + i, 0) = gaussian(rng, centres[b][0], 0.01);
      pts(b * per + i, 1) = gaussian(rng, centres[b][1], 0.01);
      truth[b * per + i] = b;
    }
  const auto m = kmeans_fit(pts, 3, 5);
  // Brute force: map each blob to the centroid nearest its generating centre.
  int map[3];
  for (int b = 0; b < 3; ++b) {
    double best = 1e9;
    for (int c = 0; c < 3; ++c) {
      const double d = std::hypot(m.centroids(c, 0) - centres[b][0], m.centroids(c, 1) - centres[b][1]);
      if (d < best) {
        best = d;
        map[b] = c;
      }
    }
    EXPECT_LT(best, 0.02);
  }
  EXPECT_NE(map[0], map[1]);
  EXPECT_NE(map[1], map[2]);
  EXPECT_NE(map[0], map[2]);
  for (int i = 0; i < 3 * per; ++i) EXPECT_EQ(m.assignments[i], map[truth[i]]);
}

TEST(KMeans, InertiaNonIncreasingAndNearestAssignment) {
  Rng rng = make_rng(23);
  Eigen::MatrixXd pts(500, 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    pts(i, 0) = uniform01(rng);
    pts(i, 1) = pts(i, 0) * pts(i, 0) * pts(i, 0) + gaussian(rng, 0.0, 0.05);
  }
  const auto m = kmeans_fit(pts, 10, 2);
  for (std::size_t i = 1; i < m.inertia_history.size(); ++i)
    EXPECT_LE(m.inertia_history[i], m.inertia_history[i - 1] + 1e-12);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double own = (pts.row(i) - m.centroids.row(m.assignments[static_cast<std::size_t>(i)])).squaredNorm();
    for (Eigen::Index c = 0; c < m.centroids.rows(); ++c) EXPECT_LE(own, (pts.row(i) - m.centroids.row(c)).squaredNorm() + 1e-15);
  }
}

TEST(KMeans, Deterministic) {
  Rng rng = make_rng(4);
  Eigen::MatrixXd pts(200, 2);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = uniform01(rng);
  const auto a = kmeans_fit(pts, 6, 9), b = kmeans_fit(pts, 6, 9);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, InfeasibleK) {
  Eigen::MatrixXd pts(4, 2);
  pts << 0.1, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.2;
  try {
    kmeans_fit(pts, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible_k);
  }
}
