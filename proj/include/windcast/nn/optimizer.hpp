#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast::nn {

using Matrix = Eigen::MatrixXd;

// Category codes follow the 1..3 optimizer gene of the search space.
enum class OptimizerKind { sgdm = 1, adam = 2, rmsprop = 3 };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgdm: return "sgdm";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "?";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgdm") return OptimizerKind::sgdm;
  if (s == "adam") return OptimizerKind::adam;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  throw Error(ErrorKind::usage, "unknown optimizer '" + s + "'");
}

struct OptimizerHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;
  double decay = 0.9;  // rmsprop
};

/// Moment buffers for one parameter set. Buffers are shaped lazily on the
/// first step to match the parameters they track.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, OptimizerHyper hyper) : kind_(kind), hyper_(hyper) {}
  Optimizer(OptimizerKind kind, double lr) : kind_(kind) { hyper_.lr = lr; }

  OptimizerKind kind() const { return kind_; }
  const OptimizerHyper& hyper() const { return hyper_; }
  long steps() const { return step_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

  /// Applies one update. Non-finite or mis-shaped gradients are refused
  /// without touching parameters or state.
  void step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
    if (params.size() != grads.size())
      throw Error(ErrorKind::dimension, "parameter and gradient counts differ");
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k]->rows() != grads[k].rows() || params[k]->cols() != grads[k].cols())
        throw Error(ErrorKind::dimension, "gradient " + std::to_string(k) + " is not parameter-shaped");
      if (!grads[k].allFinite())
        throw Error(ErrorKind::numeric, "non-finite gradient in tensor " + std::to_string(k));
    }
    if (m_.empty()) {
      for (Matrix* p : params) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        if (kind_ != OptimizerKind::sgdm) v_.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
    } else if (m_.size() != params.size()) {
      throw Error(ErrorKind::dimension, "optimizer bound to a different parameter set");
    }
    ++step_;
    const double lr = hyper_.lr;
    switch (kind_) {
      case OptimizerKind::sgdm:
        for (std::size_t k = 0; k < params.size(); ++k) {
          m_[k] = hyper_.momentum * m_[k] + grads[k];
          *params[k] -= lr * m_[k];
        }
        break;
      case OptimizerKind::adam: {
        const double c1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(step_));
        for (std::size_t k = 0; k < params.size(); ++k) {
          m_[k] = hyper_.beta1 * m_[k] + (1.0 - hyper_.beta1) * grads[k];
          v_[k] = hyper_.beta2 * v_[k] + (1.0 - hyper_.beta2) * grads[k].cwiseProduct(grads[k]);
          params[k]->array() -=
              lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + hyper_.epsilon);
        }
        break;
      }
      case OptimizerKind::rmsprop:
        for (std::size_t k = 0; k < params.size(); ++k) {
          v_[k] = hyper_.decay * v_[k] + (1.0 - hyper_.decay) * grads[k].cwiseProduct(grads[k]);
          params[k]->array() -= lr * grads[k].array() / (v_[k].array().sqrt() + hyper_.epsilon);
        }
        break;
    }
  }

 private:
  OptimizerKind kind_;
  OptimizerHyper hyper_;
  long step_ = 0;
  std::vector<Matrix> m_;  // momentum / first moment
  std::vector<Matrix> v_;  // second moment
};

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
inline double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Matrix& g : grads) g *= scale;
  }
  return norm;
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else 1/(1-rate).
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw Error(ErrorKind::parameter, "dropout rate must lie in [0, 1)");
  if (rate == 0.0) return Matrix::Ones(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = u(rng) < rate ? 0.0 : keep;
  return mask;
}

inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xD409);
  return dropout_mask(rows, cols, rate, rng);
}

}  // namespace windcast::nn
