#pragma once

// Standard test functions for the optimizers.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/search/evaluator.hpp"
#include "windcast/search/space.hpp"

namespace windcast::search {

inline double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double rosenbrock(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (1.0 - x[i]) * (1.0 - x[i]);
  return s;
}

inline double rastrigin(const std::vector<double>& x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

struct Benchmark {
  std::string name;
  FitnessFn fn;
  SearchSpace space;
};

inline Benchmark benchmark(const std::string& name, std::size_t dim) {
  if (name == "sphere") return {name, sphere, box_space(dim, -5.12, 5.12)};
  if (name == "rastrigin") return {name, rastrigin, box_space(dim, -5.12, 5.12)};
  if (name == "rosenbrock") return {name, rosenbrock, box_space(dim, -2.048, 2.048)};
  throw Error(ErrorKind::usage, "unknown benchmark '" + name + "' (sphere, rosenbrock, rastrigin)");
}

}  // namespace windcast::search
