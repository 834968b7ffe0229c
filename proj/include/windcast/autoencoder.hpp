#pragma once

// One-hidden-layer autoencoder used to score reconstruction error.

#include <Eigen/Dense>
#include <cmath>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/nn/optimizer.hpp"
#include "windcast/rng.hpp"

namespace windcast {

struct AutoencoderConfig {
  int hidden_dim = 1;
  int epochs = 500;
  double lr = 0.05;
  // Full-batch update rule.
  nn::OptimizerKind update = nn::OptimizerKind::adam;
  bool standardize = true;     // z-score inputs inside the model
  bool linear_output = false;  // identity decoder activation instead of sigmoid
};

struct AutoencoderModel {
  int input_dim = 0;
  int hidden_dim = 0;
  Eigen::MatrixXd enc_w;  // hidden x input
  Eigen::VectorXd enc_b;
  Eigen::MatrixXd dec_w;  // input x hidden
  Eigen::VectorXd dec_b;
  Eigen::RowVectorXd in_mean;   // input standardization, applied before encoding
  Eigen::RowVectorXd in_scale;
  bool linear_output = false;
  std::vector<double> loss_history;  // full-batch MSE before each update, plus final

  /// Reconstruction of `rows` (n x input_dim).
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != input_dim)
      throw Error(ErrorKind::dimension, "autoencoder expects " + std::to_string(input_dim) + " features");
    const Eigen::MatrixXd z = standardized(rows);
    Eigen::MatrixXd hidden = (z * enc_w.transpose()).rowwise() + enc_b.transpose();
    hidden = hidden.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    Eigen::MatrixXd out = (hidden * dec_w.transpose()).rowwise() + dec_b.transpose();
    if (!linear_output) out = out.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return (out.array().rowwise() * in_scale.array()).rowwise() + in_mean.array();
  }

  Eigen::MatrixXd standardized(const Eigen::MatrixXd& rows) const {
    return ((rows.rowwise() - in_mean).array().rowwise() / in_scale.array()).matrix();
  }

  /// Per-row RMSE between input and reconstruction.
  Eigen::VectorXd row_rmse(const Eigen::MatrixXd& rows) const {
    const Eigen::MatrixXd diff = reconstruct(rows) - rows;
    return (diff.array().square().rowwise().sum() / static_cast<double>(input_dim)).sqrt().matrix();
  }
};

/// Trains on the full batch to minimise mean squared reconstruction error.
inline AutoencoderModel autoencoder_fit(const Eigen::MatrixXd& rows, const AutoencoderConfig& cfg,
                                        std::uint64_t seed) {
  if (rows.rows() < 10) throw Error(ErrorKind::insufficient_data, "autoencoder needs >= 10 rows");
  if (cfg.hidden_dim < 1) throw Error(ErrorKind::parameter, "hidden_dim must be >= 1");
  const int d = static_cast<int>(rows.cols());
  const int h = cfg.hidden_dim;
  const double n = static_cast<double>(rows.rows());

  Rng rng = make_rng(seed, 0xAE);
  AutoencoderModel m;
  m.input_dim = d;
  m.hidden_dim = h;
  m.linear_output = cfg.linear_output;
  m.in_mean = Eigen::RowVectorXd::Zero(d);
  m.in_scale = Eigen::RowVectorXd::Ones(d);
  if (cfg.standardize) {
    if (cfg.linear_output) {
      m.in_mean = rows.colwise().mean();
      m.in_scale = ((rows.rowwise() - m.in_mean).array().square().colwise().sum() / n).sqrt();
    } else {
      m.in_mean = rows.colwise().minCoeff();
      m.in_scale = rows.colwise().maxCoeff() - m.in_mean;
    }
    // A constant column maps to 0.5, the sigmoid's midpoint, rather than to
    // the unreachable asymptote 0.
    for (int j = 0; j < d; ++j) {
      if (m.in_scale(j) > 0.0) continue;
      m.in_scale(j) = 1.0;
      if (!cfg.linear_output) m.in_mean(j) -= 0.5;
    }
  }
  const Eigen::MatrixXd x = m.standardized(rows);

  const double lim = std::sqrt(6.0 / (d + h));
  m.enc_w = Eigen::MatrixXd(h, d);
  m.dec_w = Eigen::MatrixXd(d, h);
  for (Eigen::Index j = 0; j < m.enc_w.cols(); ++j)
    for (Eigen::Index i = 0; i < m.enc_w.rows(); ++i) m.enc_w(i, j) = uniform(rng, -lim, lim);
  for (Eigen::Index j = 0; j < m.dec_w.cols(); ++j)
    for (Eigen::Index i = 0; i < m.dec_w.rows(); ++i) m.dec_w(i, j) = uniform(rng, -lim, lim);
  m.enc_b = Eigen::VectorXd::Zero(h);
  m.dec_b = Eigen::VectorXd::Zero(d);

  nn::Optimizer opt(cfg.update, cfg.lr);
  Eigen::MatrixXd enc_b(h, 1), dec_b(d, 1);
  std::vector<Eigen::MatrixXd> grads(4);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const Eigen::MatrixXd pre_h = (x * m.enc_w.transpose()).rowwise() + m.enc_b.transpose();
    const Eigen::MatrixXd hid = pre_h.unaryExpr(sig);
    Eigen::MatrixXd out = (hid * m.dec_w.transpose()).rowwise() + m.dec_b.transpose();
    if (!cfg.linear_output) out = out.unaryExpr(sig);
    const Eigen::MatrixXd diff = out - x;
    m.loss_history.push_back(diff.squaredNorm() / (n * d));
    if (epoch == cfg.epochs) break;

    Eigen::MatrixXd d_pre_o = (2.0 / (n * d)) * diff;
    if (!cfg.linear_output) d_pre_o = (d_pre_o.array() * out.array() * (1.0 - out.array())).matrix();
    grads[2] = d_pre_o.transpose() * hid;
    grads[3] = d_pre_o.colwise().sum().transpose();
    const Eigen::MatrixXd d_pre_h =
        ((d_pre_o * m.dec_w).array() * hid.array() * (1.0 - hid.array())).matrix();
    grads[0] = d_pre_h.transpose() * x;
    grads[1] = d_pre_h.colwise().sum().transpose();

    enc_b = m.enc_b;
    dec_b = m.dec_b;
    std::array<Eigen::MatrixXd*, 4> params = {&m.enc_w, &enc_b, &m.dec_w, &dec_b};
    opt.step(params, grads);
    m.enc_b = enc_b.col(0);
    m.dec_b = dec_b.col(0);
  }
  return m;
}

}  // namespace windcast
