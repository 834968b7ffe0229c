#include <gtest/gtest.h>

#include <cmath>

#include "windcast/autoencoder.hpp"

using namespace windcast;

namespace {

// Plain-loop forward pass from the stored weights.
double row_rmse_oracle(const AutoencoderModel& m, const Eigen::RowVectorXd& row) {
  const int d = m.input_dim, h = m.hidden_dim;
  std::vector<double> z(d), hid(h);
  for (int j = 0; j < d; ++j) z[j] = (row(j) - m.in_mean(j)) / m.in_scale(j);
  for (int k = 0; k < h; ++k) {
    double a = m.enc_b(k);
    for (int j = 0; j < d; ++j) a += m.enc_w(k, j) * z[j];
    hid[k] = 1.0 / (1.0 + std::exp(-a));
  }
  double ss = 0.0;
  for (int j = 0; j < d; ++j) {
    double a = m.dec_b(j);
    for (int k = 0; k < h; ++k) a += m.dec_w(j, k) * hid[k];
    if (!m.linear_output) a = 1.0 / (1.0 + std::exp(-a));
    const double rec = a * m.in_scale(j) + m.in_mean(j);
    ss += (rec - row(j)) * (rec - row(j));
  }
  return std::sqrt(ss / d);
}

}  // namespace

TEST(Autoencoder, ConstantDataIsLearned) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(40, 2, 0.4);
  const auto m = autoencoder_fit(rows, AutoencoderConfig{}, 1);
  EXPECT_LT(m.row_rmse(rows).maxCoeff(), 1e-3);
}

TEST(Autoencoder, Deterministic) {
  Rng rng = make_rng(8);
  Eigen::MatrixXd rows(60, 2);
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = uniform01(rng);
  const auto a = autoencoder_fit(rows, AutoencoderConfig{}, 3);
  const auto b = autoencoder_fit(rows, AutoencoderConfig{}, 3);
  EXPECT_EQ(a.enc_w, b.enc_w);
  EXPECT_EQ(a.dec_w, b.dec_w);
  EXPECT_EQ(a.enc_b, b.enc_b);
  EXPECT_EQ(a.dec_b, b.dec_b);
}

TEST(Autoencoder, FinalLossNotAboveInitial) {
  Rng rng = make_rng(9);
  Eigen::MatrixXd rows(80, 2);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    rows(i, 0) = uniform01(rng);
    rows(i, 1) = std::pow(rows(i, 0), 3) + gaussian(rng, 0.0, 0.02);
  }
  for (auto update : {nn::OptimizerKind::adam, nn::OptimizerKind::sgdm}) {
    AutoencoderConfig cfg;
    cfg.update = update;
    const auto m = autoencoder_fit(rows, cfg, 4);
    ASSERT_EQ(m.loss_history.size(), static_cast<std::size_t>(cfg.epochs) + 1);
    EXPECT_LE(m.loss_history.back(), m.loss_history.front());
  }
}

TEST(Autoencoder, OutliersReconstructWorse) {
  Eigen::MatrixXd rows(205, 2);
  for (int i = 0; i < 200; ++i) {
    rows(i, 0) = 0.1 + 0.8 * i / 199.0;
    rows(i, 1) = rows(i, 0);
  }
  const double far[5][2] = {{0.1, 0.9}, {0.2, 0.95}, {0.9, 0.1}, {0.85, 0.05}, {0.15, 0.85}};
  for (int k = 0; k < 5; ++k) {
    rows(200 + k, 0) = far[k][0];
    rows(200 + k, 1) = far[k][1];
  }
  const auto m = autoencoder_fit(rows, AutoencoderConfig{}, 12);
  const Eigen::VectorXd e = m.row_rmse(rows);
  double in = 0, out = 0;
  for (int i = 0; i < 205; ++i) {
    const double oracle = row_rmse_oracle(m, rows.row(i));
    EXPECT_NEAR(e(i), oracle, 1e-12);
    (i < 200 ? in : out) += oracle;
  }
  EXPECT_LT(in / 200.0, out / 5.0);
}

TEST(Autoencoder, TooFewRows) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Random(9, 2);
  try {
    autoencoder_fit(rows, AutoencoderConfig{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
}
