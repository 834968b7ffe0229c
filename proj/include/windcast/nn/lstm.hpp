#pragma once

// LSTM cell with batched forward pass and backpropagation through time.
//
// Activations are stored column-major: one column per sample, so a batch of B
// hidden states is a (hidden x B) matrix. The four gate blocks are stacked in
// the order forget, input, candidate, output.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Gate { forget = 0, input = 1, candidate = 2, output = 3 };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmCellParams {
  int hidden_size = 0;
  int input_size = 0;
  Matrix w;  // (4*hidden x hidden) recurrent weights
  Matrix u;  // (4*hidden x input)  input weights
  Matrix b;  // (4*hidden x 1)

  static LstmCellParams zeros(int hidden, int input) {
    LstmCellParams p;
    p.hidden_size = hidden;
    p.input_size = input;
    p.w = Matrix::Zero(4 * hidden, hidden);
    p.u = Matrix::Zero(4 * hidden, input);
    p.b = Matrix::Zero(4 * hidden, 1);
    return p;
  }

  auto w_gate(Gate g) { return w.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto u_gate(Gate g) { return u.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto b_gate(Gate g) { return b.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto w_gate(Gate g) const { return w.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto u_gate(Gate g) const { return u.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }
  auto b_gate(Gate g) const { return b.middleRows(static_cast<int>(g) * hidden_size, hidden_size); }

  bool shapes_consistent() const {
    return hidden_size > 0 && input_size > 0 && w.rows() == 4 * hidden_size &&
           w.cols() == hidden_size && u.rows() == 4 * hidden_size && u.cols() == input_size &&
           b.rows() == 4 * hidden_size && b.cols() == 1;
  }

  bool all_finite() const { return w.allFinite() && u.allFinite() && b.allFinite(); }
};

/// Xavier-uniform weights; zero biases except forget-gate bias = 1.
inline LstmCellParams init_lstm(int hidden, int input, Rng& rng) {
  LstmCellParams p = LstmCellParams::zeros(hidden, input);
  const double lim_u = std::sqrt(6.0 / (input + hidden));
  const double lim_w = std::sqrt(6.0 / (hidden + hidden));
  for (Eigen::Index j = 0; j < p.u.cols(); ++j)
    for (Eigen::Index i = 0; i < p.u.rows(); ++i) p.u(i, j) = uniform(rng, -lim_u, lim_u);
  for (Eigen::Index j = 0; j < p.w.cols(); ++j)
    for (Eigen::Index i = 0; i < p.w.rows(); ++i) p.w(i, j) = uniform(rng, -lim_w, lim_w);
  p.b_gate(Gate::forget).setOnes();
  return p;
}

struct LstmState {
  Matrix h;  // hidden x batch
  Matrix c;  // hidden x batch

  static LstmState zeros(int hidden, Eigen::Index batch) {
    return {Matrix::Zero(hidden, batch), Matrix::Zero(hidden, batch)};
  }
};

/// Everything the backward pass needs from one forward step.
struct GateCache {
  Matrix x;
  Matrix h_prev;
  Matrix c_prev;
  Matrix f, i, g, o;  // gate activations (g is the candidate c~)
  Matrix c;
  Matrix tanh_c;
};

struct StepResult {
  LstmState state;
  GateCache cache;
};

inline StepResult lstm_step(const LstmCellParams& p, const Matrix& x, const LstmState& prev) {
  if (!p.shapes_consistent()) throw Error(ErrorKind::dimension, "inconsistent LSTM parameter shapes");
  if (x.rows() != p.input_size)
    throw Error(ErrorKind::dimension, "input has " + std::to_string(x.rows()) + " rows, expected " +
                                          std::to_string(p.input_size));
  if (prev.h.rows() != p.hidden_size || prev.c.rows() != p.hidden_size ||
      prev.h.cols() != x.cols() || prev.c.cols() != x.cols())
    throw Error(ErrorKind::dimension, "previous state does not match hidden size / batch");

  const int h = p.hidden_size;
  Matrix z = p.u * x;
  z.noalias() += p.w * prev.h;
  z.colwise() += p.b.col(0);

  StepResult out;
  GateCache& k = out.cache;
  k.x = x;
  k.h_prev = prev.h;
  k.c_prev = prev.c;
  k.f = z.middleRows(0 * h, h).unaryExpr([](double v) { return sigmoid(v); });
  k.i = z.middleRows(1 * h, h).unaryExpr([](double v) { return sigmoid(v); });
  k.g = z.middleRows(2 * h, h).array().tanh().matrix();
  k.o = z.middleRows(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
  k.c = (prev.c.array() * k.f.array() + k.i.array() * k.g.array()).matrix();
  k.tanh_c = k.c.array().tanh().matrix();
  out.state.c = k.c;
  out.state.h = (k.o.array() * k.tanh_c.array()).matrix();
  if (!out.state.h.allFinite() || !out.state.c.allFinite())
    throw Error(ErrorKind::numeric,
                "non-finite LSTM state; |w|=" + std::to_string(p.w.norm()) +
                    " |u|=" + std::to_string(p.u.norm()) + " |b|=" + std::to_string(p.b.norm()));
  return out;
}

/// Single-sample convenience overload.
inline StepResult lstm_step(const LstmCellParams& p, const Vector& x, const LstmState& prev) {
  return lstm_step(p, Matrix(x), prev);
}

struct SequenceResult {
  std::vector<GateCache> caches;
  std::vector<Matrix> h;  // hidden state after each step
  LstmState final_state;
};

/// Runs the cell over `xs` (one input matrix per time step) from a zero state.
inline SequenceResult lstm_forward(const LstmCellParams& p, std::span<const Matrix> xs) {
  if (xs.empty()) throw Error(ErrorKind::dimension, "empty input sequence");
  SequenceResult out;
  out.caches.reserve(xs.size());
  out.h.reserve(xs.size());
  LstmState state = LstmState::zeros(p.hidden_size, xs.front().cols());
  for (const Matrix& x : xs) {
    StepResult step = lstm_step(p, x, state);
    state = step.state;
    out.h.push_back(state.h);
    out.caches.push_back(std::move(step.cache));
  }
  out.final_state = std::move(state);
  return out;
}

struct LstmGradients {
  LstmCellParams params;   // same shapes as the cell parameters
  std::vector<Matrix> dx;  // gradient w.r.t. each step's input
};

/// Backpropagation through time. `dh` holds the loss gradient flowing into
/// each step's hidden output from above (entries may be empty = zero).
inline LstmGradients lstm_backward(const LstmCellParams& p, std::span<const GateCache> caches,
                                   std::span<const Matrix> dh) {
  if (caches.empty()) throw Error(ErrorKind::contract, "backward pass without forward caches");
  if (dh.size() != caches.size())
    throw Error(ErrorKind::contract, "need one upstream gradient slot per cached step");
  const int h = p.hidden_size;
  const Eigen::Index batch = caches.front().x.cols();

  LstmGradients grads;
  grads.params = LstmCellParams::zeros(h, p.input_size);
  grads.dx.resize(caches.size());

  Matrix dh_next = Matrix::Zero(h, batch);
  Matrix dc_next = Matrix::Zero(h, batch);
  Matrix dz(4 * h, batch);
  for (std::size_t step = caches.size(); step-- > 0;) {
    const GateCache& k = caches[step];
    if (k.x.size() == 0 || k.f.size() == 0)
      throw Error(ErrorKind::contract, "missing forward cache at step " + std::to_string(step));
    Matrix dh_total = dh_next;
    if (dh[step].size() != 0) dh_total += dh[step];

    const auto d_o = (dh_total.array() * k.tanh_c.array()).eval();
    const auto dc = (dc_next.array() +
                     dh_total.array() * k.o.array() * (1.0 - k.tanh_c.array().square()))
                        .eval();
    dz.middleRows(0 * h, h) = (dc * k.c_prev.array() * k.f.array() * (1.0 - k.f.array())).matrix();
    dz.middleRows(1 * h, h) = (dc * k.g.array() * k.i.array() * (1.0 - k.i.array())).matrix();
    dz.middleRows(2 * h, h) = (dc * k.i.array() * (1.0 - k.g.array().square())).matrix();
    dz.middleRows(3 * h, h) = (d_o * k.o.array() * (1.0 - k.o.array())).matrix();

    grads.params.w.noalias() += dz * k.h_prev.transpose();
    grads.params.u.noalias() += dz * k.x.transpose();
    grads.params.b.col(0) += dz.rowwise().sum();

    dh_next.noalias() = p.w.transpose() * dz;
    grads.dx[step].noalias() = p.u.transpose() * dz;
    dc_next = (dc * k.f.array()).matrix();
  }
  return grads;
}

/// Gradient given only dLoss/dh at the final step.
inline LstmGradients lstm_backward(const LstmCellParams& p, std::span<const GateCache> caches,
                                   const Matrix& dh_last) {
  std::vector<Matrix> dh(caches.size());
  if (!dh.empty()) dh.back() = dh_last;
  return lstm_backward(p, caches, std::span<const Matrix>(dh));
}

}  // namespace windcast::nn
