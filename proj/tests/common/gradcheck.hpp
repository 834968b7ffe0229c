#pragma once

// Central-difference gradient check for the LSTM cell. The scalar loss is a
// fixed random projection of every hidden state, so every step receives an
// upstream gradient.

#include <algorithm>
#include <cmath>
#include <vector>

#include "windcast/nn/lstm.hpp"
#include "windcast/rng.hpp"

namespace gradcheck {

using windcast::nn::Matrix;

struct Problem {
  windcast::nn::LstmCellParams params;
  std::vector<Matrix> xs;   // input_size x batch, one per step
  std::vector<Matrix> proj; // hidden x batch, one per step
};

inline Problem random_problem(int hidden, int input, int steps, int batch, windcast::Rng& rng) {
  Problem p;
  p.params = windcast::nn::LstmCellParams::zeros(hidden, input);
  for (Matrix* m : {&p.params.w, &p.params.u, &p.params.b})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = windcast::uniform(rng, -0.8, 0.8);
  for (int t = 0; t < steps; ++t) {
    Matrix x(input, batch), r(hidden, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = windcast::uniform(rng, -1.0, 1.0);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = windcast::uniform(rng, -1.0, 1.0);
    p.xs.push_back(x);
    p.proj.push_back(r);
  }
  return p;
}

inline double loss(const windcast::nn::LstmCellParams& params, const Problem& p) {
  const auto fwd = windcast::nn::lstm_forward(params, p.xs);
  double l = 0.0;
  for (std::size_t t = 0; t < p.xs.size(); ++t) l += fwd.h[t].cwiseProduct(p.proj[t]).sum();
  return l;
}

struct Result {
  double max_rel = 0.0;
  double max_abs = 0.0;
};

/// Compares analytic parameter and input gradients with central differences.
inline Result check(const Problem& p, double step = 1e-5) {
  const auto fwd = windcast::nn::lstm_forward(p.params, p.xs);
  const auto g = windcast::nn::lstm_backward(p.params, fwd.caches, p.proj);
  Result r;
  auto compare = [&](double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    r.max_abs = std::max(r.max_abs, diff);
    r.max_rel = std::max(r.max_rel, diff / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  };
  auto params = p.params;
  const std::pair<Matrix*, const Matrix*> blocks[] = {
      {&params.w, &g.params.w}, {&params.u, &g.params.u}, {&params.b, &g.params.b}};
  for (auto [m, grad] : blocks) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      const double keep = m->data()[i];
      m->data()[i] = keep + step;
      const double up = loss(params, p);
      m->data()[i] = keep - step;
      const double down = loss(params, p);
      m->data()[i] = keep;
      compare(grad->data()[i], (up - down) / (2.0 * step));
    }
  }
  Problem q = p;
  for (std::size_t t = 0; t < q.xs.size(); ++t) {
    for (Eigen::Index i = 0; i < q.xs[t].size(); ++i) {
      const double keep = q.xs[t].data()[i];
      q.xs[t].data()[i] = keep + step;
      const double up = loss(q.params, q);
      q.xs[t].data()[i] = keep - step;
      const double down = loss(q.params, q);
      q.xs[t].data()[i] = keep;
      compare(g.dx[t].data()[i], (up - down) / (2.0 * step));
    }
  }
  return r;
}

}  // namespace gradcheck
