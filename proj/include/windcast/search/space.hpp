#pragma once

// Mixed continuous/integer/categorical search space with a real-valued
// genome. Log-scale dimensions keep their gene in log10 units.

#include <cmath>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/forecaster.hpp"
#include "windcast/rng.hpp"

namespace windcast::search {

enum class DimKind { continuous, integer, categorical };
enum class Scale { linear, log };

struct Dimension {
  std::string name;
  DimKind kind = DimKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  Scale scale = Scale::linear;

  double gene_lower() const { return scale == Scale::log ? std::log10(lower) : lower; }
  double gene_upper() const { return scale == Scale::log ? std::log10(upper) : upper; }
};

using Genome = std::vector<double>;

/// Folds `x` back into [lo, hi] by mirror reflection at the bounds.
inline double reflect_into(double x, double lo, double hi) {
  if (x >= lo && x <= hi) return x;
  const double range = hi - lo;
  if (!(range > 0.0) || !std::isfinite(x)) return lo;
  double y = std::fmod(x - lo, 2.0 * range);
  if (y < 0.0) y += 2.0 * range;
  if (y > range) y = 2.0 * range - y;
  return lo + y;
}

struct SearchSpace {
  std::vector<Dimension> dims;

  std::size_t size() const { return dims.size(); }

  void validate() const {
    if (dims.empty()) throw Error(ErrorKind::parameter, "search space has no dimensions");
    for (const auto& d : dims) {
      if (!(d.lower < d.upper))
        throw Error(ErrorKind::parameter, "dimension '" + d.name + "' needs lower < upper");
      if (d.scale == Scale::log && !(d.lower > 0.0))
        throw Error(ErrorKind::parameter, "log-scale dimension '" + d.name + "' must be strictly positive");
    }
  }

  Genome reflect(Genome g) const {
    require_length(g);
    for (std::size_t i = 0; i < dims.size(); ++i)
      g[i] = reflect_into(g[i], dims[i].gene_lower(), dims[i].gene_upper());
    return g;
  }

  Genome random_genome(Rng& rng) const {
    Genome g(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) g[i] = uniform(rng, dims[i].gene_lower(), dims[i].gene_upper());
    return g;
  }

  /// Decoded values in natural units: log genes exponentiated, integer and
  /// categorical genes rounded to the nearest admissible value.
  std::vector<double> decode_values(const Genome& genome) const {
    const Genome g = reflect(genome);
    std::vector<double> out(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const Dimension& d = dims[i];
      double v = d.scale == Scale::log ? std::pow(10.0, g[i]) : g[i];
      if (d.kind != DimKind::continuous) v = std::round(v);
      out[i] = std::clamp(v, d.kind == DimKind::continuous ? d.lower : std::ceil(d.lower),
                          d.kind == DimKind::continuous ? d.upper : std::floor(d.upper));
    }
    return out;
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (dims[i].name == name) return i;
    throw Error(ErrorKind::parameter, "search space has no dimension '" + name + "'");
  }

 private:
  void require_length(const Genome& g) const {
    if (g.size() != dims.size())
      throw Error(ErrorKind::dimension, "genome has " + std::to_string(g.size()) + " genes, space has " +
                                            std::to_string(dims.size()) + " dimensions");
  }
};

/// The LSTM hyperparameter space: layers, neurons, batch size, learning rate, optimizer.
inline SearchSpace lstm_space() {
  return SearchSpace{{
      {"num_layers", DimKind::integer, 1, 2, Scale::linear},
      {"hidden1", DimKind::integer, 10, 256, Scale::linear},
      {"hidden2", DimKind::integer, 10, 256, Scale::linear},
      {"batch_size", DimKind::integer, 128, 2048, Scale::linear},
      {"learning_rate", DimKind::continuous, 1e-5, 1e-1, Scale::log},
      {"optimizer", DimKind::categorical, 1, 3, Scale::linear},
  }};
}

/// A box of `d` continuous linear dimensions, used by the benchmark functions.
inline SearchSpace box_space(std::size_t d, double lower, double upper) {
  SearchSpace s;
  for (std::size_t i = 0; i < d; ++i)
    s.dims.push_back({"x" + std::to_string(i), DimKind::continuous, lower, upper, Scale::linear});
  return s;
}

/// Applies decoded values onto `base`; dimensions the space does not contain
/// keep their base value.
inline ForecasterConfig apply_values(const SearchSpace& space, const std::vector<double>& values,
                                     ForecasterConfig base) {
  if (values.size() != space.size()) throw Error(ErrorKind::dimension, "value count does not match space");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string& n = space.dims[i].name;
    const double v = values[i];
    if (n == "num_layers") base.num_layers = static_cast<int>(v);
    else if (n == "hidden1") base.hidden1 = static_cast<int>(v);
    else if (n == "hidden2") base.hidden2 = static_cast<int>(v);
    else if (n == "batch_size") base.batch_size = static_cast<int>(v);
    else if (n == "learning_rate") base.learning_rate = v;
    else if (n == "optimizer") base.optimizer = static_cast<nn::OptimizerKind>(static_cast<int>(v));
    else if (n == "max_epochs") base.max_epochs = static_cast<int>(v);
    else if (n == "dropout_rate") base.dropout_rate = v;
    else throw Error(ErrorKind::parameter, "dimension '" + n + "' has no forecaster counterpart");
  }
  return base;
}

inline ForecasterConfig decode(const Genome& genome, const SearchSpace& space, const ForecasterConfig& base = {}) {
  return apply_values(space, space.decode_values(genome), base);
}

}  // namespace windcast::search
