#include <gtest/gtest.h>

#include <l2c/agent_model.hpp>
#include <l2c/hyper_params.hpp>

#include <random>

#include "dense_oracles.hpp"

namespace l2c {
namespace {

TEST(LinearTestAgent, StepIsAffineMap) {
  Matrix A = Matrix::Identity(2, 2);
  Matrix B(2, 1);
  B << 0, 1;
  auto agent = make_linear_test_agent(2, 1, A, B);
  Vector x(2), u(1);
  x << 1, 0;
  u << 1;
  const Vector next = agent->step(x, u, Vector());
  EXPECT_DOUBLE_EQ(next(0), 1.0);
  EXPECT_DOUBLE_EQ(next(1), 1.0);
  EXPECT_EQ(agent->jac_x(x, u, Vector()), A);
}

TEST(LinearTestAgent, DoubleIntegratorStep) {
  const double dt = 0.1;
  Matrix A(2, 2), B(2, 1);
  A << 1, dt, 0, 1;
  B << dt * dt / 2, dt;
  auto agent = make_linear_test_agent(2, 1, A, B);
  Vector x(2), u(1);
  x << 0, 1;
  u << 0;
  const Vector next = agent->step(x, u, Vector());
  EXPECT_NEAR(next(0), 0.1, 1e-15);
  EXPECT_NEAR(next(1), 1.0, 1e-15);
}

TEST(LinearTestAgent, RejectsMismatchedShapes) {
  EXPECT_THROW(make_linear_test_agent(2, 1, Matrix::Identity(3, 3), Matrix::Zero(2, 1)), ConfigError);
  EXPECT_THROW(make_linear_test_agent(2, 1, Matrix::Identity(2, 2), Matrix::Zero(2, 2)), ConfigError);
}

TEST(LinearTestAgent, ZeroThetaJacobianAndDeterministicStep) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N01;
  Matrix A = Matrix::NullaryExpr(3, 3, [&] { return N01(rng); });
  Matrix B = Matrix::NullaryExpr(3, 2, [&] { return N01(rng); });
  auto agent = make_linear_test_agent(3, 2, A, B);
  const Vector th = Vector::Ones(5);
  for (int t = 0; t < 100; ++t) {
    Vector x = Vector::NullaryExpr(3, [&] { return N01(rng); });
    Vector u = Vector::NullaryExpr(2, [&] { return N01(rng); });
    EXPECT_EQ(agent->jac_theta(x, u, th), Matrix::Zero(3, 5));
    const Vector a = agent->step(x, u, th);
    const Vector b = agent->step(x, u, th);
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * 3));
    auto fx = [&](const Vector& z) { return agent->step(z, u, th); };
    auto fu = [&](const Vector& z) { return agent->step(x, z, th); };
    EXPECT_LT(testing::rel_err(agent->jac_x(x, u, th), testing::fd_jacobian(fx, x)), 1e-5);
    EXPECT_LT(testing::rel_err(agent->jac_u(x, u, th), testing::fd_jacobian(fu, u)), 1e-5);
  }
}

TEST(MapTheta, MidpointAndJacobian) {
  ThetaLayout layout;
  layout.add("w", 3);
  const HyperParams hp = map_theta(Vector::Constant(3, 0.5), layout);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(hp.theta(i), 500.005, 1e-12);
  const Vector d = hp.dtheta_draw();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d(i), 999.99, 1e-12);
}

TEST(MapTheta, LowerBoundaryLimit) {
  ThetaLayout layout;
  layout.add("w", 1);
  const HyperParams hp = map_theta(Vector::Constant(1, 1e-14), layout);
  EXPECT_NEAR(hp.theta(0), 0.01, 1e-9);
}

TEST(MapTheta, RejectsOutOfRange) {
  ThetaLayout layout;
  layout.add("w", 2);
  EXPECT_THROW(map_theta(Vector::Constant(2, 1.0), layout), DomainError);
  EXPECT_THROW(map_theta(Vector::Constant(2, -0.1), layout), DomainError);
  EXPECT_THROW(map_theta(Vector::Constant(3, 0.5), layout), ConfigError);
}

TEST(MapTheta, StrictlyMonotoneAndWithinBounds) {
  ThetaLayout layout;
  layout.add("a", 2);
  layout.add("b", 1, false);
  double prev = -1.0;
  for (double r = 0.01; r < 1.0; r += 0.01) {
    Vector raw(3);
    raw << r, 0.3, 7.0;
    const HyperParams hp = map_theta(raw, layout);
    EXPECT_GT(hp.theta(0), prev);
    prev = hp.theta(0);
    EXPECT_GE(hp.theta(0), hp.w_min);
    EXPECT_LE(hp.theta(0), hp.w_max);
    EXPECT_DOUBLE_EQ(hp.theta(2), 7.0);  // unmapped passes through
  }
}

TEST(ThetaLayout, OffsetsAreContiguous) {
  ThetaLayout l;
  EXPECT_EQ(l.add("load.Q", 13), 0);
  EXPECT_EQ(l.add("load.R", 6), 13);
  EXPECT_EQ(l.offset("load.R"), 13);
  EXPECT_EQ(l.size(), 19);
  EXPECT_THROW(l.add("load.Q", 1), ConfigError);
  EXPECT_THROW(l.find("nope"), ConfigError);
}

TEST(Trajectory, LengthInvariant) {
  Trajectory t = Trajectory::zeros(2, 1, 5);
  EXPECT_EQ(t.states.size(), 6u);
  EXPECT_EQ(t.controls.size(), 5u);
  EXPECT_NO_THROW(t.validate());
  t.states.pop_back();
  EXPECT_THROW(t.validate(), ConfigError);
}

}  // namespace
}  // namespace l2c
