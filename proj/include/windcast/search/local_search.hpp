#pragma once

// Local refinement of a single candidate, spending evaluations from the
// shared budget.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "windcast/search/evaluator.hpp"

namespace windcast::search {

enum class LocalSearchMode { off, coordinate, bfgs };

inline const char* to_string(LocalSearchMode m) {
  switch (m) {
    case LocalSearchMode::off: return "off";
    case LocalSearchMode::coordinate: return "coordinate";
    case LocalSearchMode::bfgs: return "bfgs";
  }
  return "?";
}

inline LocalSearchMode local_search_from_string(const std::string& s) {
  if (s == "off") return LocalSearchMode::off;
  if (s == "coordinate") return LocalSearchMode::coordinate;
  if (s == "bfgs") return LocalSearchMode::bfgs;
  throw Error(ErrorKind::usage, "unknown local search mode '" + s + "'");
}

/// Three probes per continuous dimension: x - step, x + step, and the vertex
/// of the parabola through the three points when it is convex. `steps[i]` is
/// the probe distance in gene units.
inline Candidate coordinate_search(const Candidate& start, const std::vector<double>& steps, Evaluator& ev) {
  Candidate best = start;
  const SearchSpace& space = ev.space();
  for (std::size_t i = 0; i < space.size() && !ev.exhausted(); ++i) {
    if (space.dims[i].kind != DimKind::continuous || !(steps[i] > 0.0)) continue;
    const double x0 = best.genome[i];
    const double f0 = best.fitness;
    const double d = steps[i];
    Genome lo = best.genome, hi = best.genome;
    lo[i] = x0 - d;
    hi[i] = x0 + d;
    auto probes = ev.evaluate({lo, hi});
    if (probes.size() < 2) {
      for (auto& p : probes)
        if (p.fitness < best.fitness) best = p;
      break;
    }
    const double fl = probes[0].fitness, fh = probes[1].fitness;
    Candidate local = best;
    for (auto& p : probes)
      if (p.fitness < local.fitness) local = p;
    const double curv = fl - 2.0 * f0 + fh;
    if (std::isfinite(curv) && curv > 0.0 && !ev.exhausted()) {
      Genome v = best.genome;
      v[i] = x0 + 0.5 * d * (fl - fh) / curv;
      if (auto p = ev.evaluate_one(v); p && p->fitness < local.fitness) local = *p;
    }
    best = local;
  }
  return best;
}

/// Quasi-Newton (BFGS) descent with central-difference gradients and a
/// backtracking Armijo line search, for smooth benchmark functions.
inline Candidate bfgs_search(const Candidate& start, Evaluator& ev, std::size_t max_evals, double fd_step = 1e-6) {
  const std::size_t n = start.genome.size();
  const std::size_t stop_at = ev.used() + max_evals;
  Candidate best = start;
  auto budget_left = [&] { return !ev.exhausted() && ev.used() < stop_at; };
  auto gradient = [&](const Genome& x, Eigen::VectorXd& g) -> bool {
    if (ev.used() + 2 * n > stop_at || ev.remaining() < 2 * n) return false;
    std::vector<Genome> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Genome a = x, b = x;
      a[i] += fd_step;
      b[i] -= fd_step;
      pts.push_back(a);
      pts.push_back(b);
    }
    const auto r = ev.evaluate(pts);
    g.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) g(static_cast<Eigen::Index>(i)) = (r[2 * i].fitness - r[2 * i + 1].fitness) / (2.0 * fd_step);
    return g.allFinite();
  };

  Eigen::VectorXd g;
  if (!gradient(best.genome, g)) return best;
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  while (budget_left()) {
    Eigen::VectorXd dir = -hinv * g;
    if (dir.dot(g) >= 0.0) {
      hinv.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    const double slope = g.dot(dir);
    bool moved = false;
    Candidate next;
    while (budget_left() && step > 1e-12) {
      Genome x = best.genome;
      for (std::size_t i = 0; i < n; ++i) x[i] += step * dir(static_cast<Eigen::Index>(i));
      auto p = ev.evaluate_one(x);
      if (!p) break;
      if (p->fitness <= best.fitness + 1e-4 * step * slope) {
        next = *p;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    Eigen::VectorXd s(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) s(static_cast<Eigen::Index>(i)) = next.genome[i] - best.genome[i];
    best = next;
    Eigen::VectorXd g_new;
    if (!gradient(best.genome, g_new)) break;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      hinv = (I - rho * s * y.transpose()) * hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    g = g_new;
    if (g.norm() < 1e-10) break;
  }
  return best;
}

/// Per-dimension spread of a population, used as the coordinate probe step.
inline std::vector<double> population_spread(const std::vector<Candidate>& pop, const SearchSpace& space) {
  const std::size_t d = space.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (const auto& c : pop) mean += c.genome[i];
    mean /= static_cast<double>(pop.size());
    double var = 0.0;
    for (const auto& c : pop) var += (c.genome[i] - mean) * (c.genome[i] - mean);
    out[i] = std::sqrt(var / static_cast<double>(pop.size()));
    if (!(out[i] > 0.0)) out[i] = 1e-3 * (space.dims[i].gene_upper() - space.dims[i].gene_lower());
  }
  return out;
}

/// Runs the configured local search on `start`.
inline Candidate local_search(LocalSearchMode mode, const Candidate& start, const std::vector<Candidate>& pop,
                              Evaluator& ev, std::size_t bfgs_evals) {
  switch (mode) {
    case LocalSearchMode::off: return start;
    case LocalSearchMode::coordinate: return coordinate_search(start, population_spread(pop, ev.space()), ev);
    case LocalSearchMode::bfgs: return bfgs_search(start, ev, bfgs_evals);
  }
  return start;
}

}  // namespace windcast::search
