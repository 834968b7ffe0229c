#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "windcast/nn/optimizer.hpp"

using namespace windcast;
using namespace windcast::nn;

namespace {

void step_once(Optimizer& opt, Matrix& theta, const Matrix& grad) {
  std::array<Matrix*, 1> params = {&theta};
  std::array<Matrix, 1> grads = {grad};
  opt.step(params, grads);
}

}  // namespace

TEST(Optimizer, ZeroLearningRateLeavesParameters) {
  for (auto kind : {OptimizerKind::sgdm, OptimizerKind::adam, OptimizerKind::rmsprop}) {
    Optimizer opt(kind, 0.0);
    Matrix theta = Matrix::Constant(2, 3, 0.25);
    const Matrix before = theta;
    step_once(opt, theta, Matrix::Constant(2, 3, 1.5));
    EXPECT_EQ(theta, before) << to_string(kind);
    EXPECT_EQ(opt.steps(), 1);
  }
}

TEST(Optimizer, AdamFirstStep) {
  Optimizer opt(OptimizerKind::adam, 0.1);
  Matrix theta = Matrix::Zero(1, 1);
  step_once(opt, theta, Matrix::Ones(1, 1));
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(theta(0, 0), -0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Optimizer, MomentumTwoSteps) {
  Optimizer opt(OptimizerKind::sgdm, 0.1);
  Matrix theta = Matrix::Zero(1, 1);
  step_once(opt, theta, Matrix::Ones(1, 1));
  EXPECT_NEAR(theta(0, 0), -0.1, 1e-15);
  step_once(opt, theta, Matrix::Ones(1, 1));
  EXPECT_NEAR(theta(0, 0), -(0.1 + 0.1 * 1.9), 1e-15);
}

TEST(Optimizer, RmspropFirstStep) {
  Optimizer opt(OptimizerKind::rmsprop, 0.01);
  Matrix theta = Matrix::Zero(1, 1);
  step_once(opt, theta, Matrix::Constant(1, 1, 2.0));
  const double v = 0.1 * 4.0;
  EXPECT_NEAR(theta(0, 0), -0.01 * 2.0 / (std::sqrt(v) + 1e-8), 1e-15);
}

TEST(Optimizer, NonFiniteGradientRefused) {
  Optimizer opt(OptimizerKind::adam, 0.1);
  Matrix theta = Matrix::Constant(2, 2, 1.0);
  Matrix bad = Matrix::Ones(2, 2);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  try {
    step_once(opt, theta, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  EXPECT_EQ(theta, Matrix::Constant(2, 2, 1.0));
  EXPECT_EQ(opt.steps(), 0);
}

TEST(Optimizer, ShapeMismatch) {
  Optimizer opt(OptimizerKind::sgdm, 0.1);
  Matrix theta = Matrix::Zero(2, 2);
  EXPECT_THROW(step_once(opt, theta, Matrix::Zero(3, 2)), Error);
}

TEST(ClipGlobalNorm, ScalesJointNorm) {
  std::array<Matrix, 2> g = {Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g[1](0, 0), 0.8, 1e-15);
  std::array<Matrix, 1> small = {Matrix::Constant(1, 1, 0.5)};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small[0](0, 0), 0.5);
}

TEST(Dropout, ZeroRateIsOnes) { EXPECT_EQ(dropout_mask(5, 7, 0.0, std::uint64_t{3}), Matrix::Ones(5, 7)); }

TEST(Dropout, InvertedScalingMean) {
  const Matrix m = dropout_mask(1000, 100, 0.5, std::uint64_t{11});
  EXPECT_GE(m.mean(), 0.98);
  EXPECT_LE(m.mean(), 1.02);
  for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_TRUE(m.data()[i] == 0.0 || m.data()[i] == 2.0);
}

TEST(Dropout, SameSeedSameMask) {
  EXPECT_EQ(dropout_mask(20, 20, 0.3, std::uint64_t{5}), dropout_mask(20, 20, 0.3, std::uint64_t{5}));
}

TEST(Dropout, RateOneRejected) {
  try {
    dropout_mask(2, 2, 1.0, std::uint64_t{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parameter);
  }
}
