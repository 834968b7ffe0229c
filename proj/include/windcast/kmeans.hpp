#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast {

struct ClusterModel {
  int k = 0;
  Eigen::MatrixXd centroids;     // k x dim
  std::vector<int> assignments;  // one per point
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after every assignment step
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::size_t count_distinct_rows(const Eigen::MatrixXd& points) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(points.rows()),
                                        std::vector<double>(static_cast<std::size_t>(points.cols())));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = points(i, j);
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

}  // namespace detail

/// Index of the nearest centroid (lowest index wins ties) and its squared distance.
inline std::pair<int, double> nearest_centroid(const Eigen::MatrixXd& centroids,
                                               const Eigen::Ref<const Eigen::RowVectorXd>& point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return {best, best_d};
}

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its current centroid.
inline ClusterModel kmeans_fit(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                               int max_iters = 300) {
  if (k < 1) throw Error(ErrorKind::parameter, "k must be >= 1");
  const Eigen::Index n = points.rows();
  if (n == 0 || detail::count_distinct_rows(points) < static_cast<std::size_t>(k))
    throw Error(ErrorKind::infeasible_k,
                "fewer distinct points than k=" + std::to_string(k));

  Rng rng = make_rng(seed, 0xC1A5);
  ClusterModel m;
  m.k = k;
  m.centroids.resize(k, points.cols());

  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  m.centroids.row(0) = points.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - m.centroids.row(c - 1)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
      // Never pick a point that already coincides with a centroid.
      while (d2[static_cast<std::size_t>(chosen)] == 0.0 && chosen > 0) --chosen;
      if (d2[static_cast<std::size_t>(chosen)] == 0.0) {
        chosen = static_cast<Eigen::Index>(
            std::max_element(d2.begin(), d2.end()) - d2.begin());
      }
    }
    m.centroids.row(c) = points.row(chosen);
  }

  m.assignments.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [c, d] = nearest_centroid(m.centroids, points.row(i));
      if (c != m.assignments[static_cast<std::size_t>(i)]) changed = true;
      m.assignments[static_cast<std::size_t>(i)] = c;
      dist[static_cast<std::size_t>(i)] = d;
      inertia += d;
    }
    m.inertia = inertia;
    m.inertia_history.push_back(inertia);
    m.iterations = iter + 1;
    if (!changed) {
      m.converged = true;
      break;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = m.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        m.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        const auto far = static_cast<Eigen::Index>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        m.centroids.row(c) = points.row(far);
        dist[static_cast<std::size_t>(far)] = 0.0;
      }
    }
  }
  return m;
}

}  // namespace windcast
