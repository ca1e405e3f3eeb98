#include <gtest/gtest.h>

#include <l2c/ddp.hpp>

#include <random>

#include "dense_oracles.hpp"

namespace l2c {
namespace {

using testing::dense_lq_optimum;
using testing::traj_rel_err;

// x' = x + u, l = 1/2 (x^2 + u^2), terminal 1/2 x^2, N = 1.
struct ScalarOneStep {
  std::shared_ptr<const AgentModel> model = make_linear_test_agent(1, 1, Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  AugmentedCost cost = AugmentedCost::plain(
      QuadraticCost::tracking(Vector::Ones(1), Vector::Ones(1), Vector::Ones(1), Vector::Zero(1), Vector::Zero(1), 1));
};

TEST(DdpBackwardPass, ScalarOneStepGains) {
  ScalarOneStep s;
  Trajectory nom = Trajectory::zeros(1, 1, 1);
  const DdpWorkspace ws = backward_pass(*s.model, s.cost, nom, Vector(), 0.0);
  EXPECT_NEAR(ws.Vxx[1](0, 0), 1.0, 1e-15);
  EXPECT_NEAR(ws.Quu[0](0, 0), 2.0, 1e-15);
  EXPECT_NEAR(ws.K[0](0, 0), -0.5, 1e-15);
  EXPECT_NEAR(ws.k[0](0), 0.0, 1e-15);  // zero nominal is already optimal
}

TEST(DdpSolve, ScalarOneStepOptimum) {
  // min 1/2 (1 + u^2) + 1/2 (1 + u)^2 gives u = -1/2, i.e. K_0 * x0.
  ScalarOneStep s;
  Trajectory init = Trajectory::zeros(1, 1, 1);
  init.states[0](0) = 1.0;
  const DdpResult r = ddp_solve(*s.model, s.cost, init, Vector());
  EXPECT_NEAR(r.trajectory.controls[0](0), -0.5, 1e-10);
  EXPECT_TRUE(r.report.converged);
}

TEST(DdpSolve, ScalarOneStepHeavierControlWeight) {
  // R = 2: min 1/2 (1 + 2u^2) + 1/2 (1 + u)^2 gives u = -1/3.
  auto model = make_linear_test_agent(1, 1, Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  auto cost = AugmentedCost::plain(QuadraticCost::tracking(Vector::Ones(1), Vector::Constant(1, 2.0), Vector::Ones(1),
                                                           Vector::Zero(1), Vector::Zero(1), 1));
  Trajectory init = Trajectory::zeros(1, 1, 1);
  init.states[0](0) = 1.0;
  const DdpResult r = ddp_solve(*model, cost, init, Vector());
  EXPECT_NEAR(r.trajectory.controls[0](0), -1.0 / 3.0, 1e-10);
}

TEST(DdpBackwardPass, ZeroReferencesZeroNominalGivesZeroFeedforward) {
  auto model = make_double_integrator(2, 0.1);
  auto cost = AugmentedCost::plain(
      QuadraticCost::tracking(Vector::Ones(4), Vector::Ones(2), Vector::Ones(4), Vector::Zero(4), Vector::Zero(2), 10));
  const DdpWorkspace ws = backward_pass(*model, cost, Trajectory::zeros(4, 2, 10), Vector(), 0.0);
  EXPECT_EQ(ws.max_feedforward(), 0.0);
  for (int k = 0; k <= 10; ++k) EXPECT_LT((ws.Vxx[k] - ws.Vxx[k].transpose()).norm(), 1e-12);
}

TEST(DdpBackwardPass, FullSecondOrderMatchesIlqrOnLinearModel) {
  auto model = make_double_integrator(1, 0.1);
  auto cost = AugmentedCost::plain(QuadraticCost::tracking(Vector::Ones(2), Vector::Ones(1), Vector::Ones(2),
                                                           Vector::Ones(2), Vector::Zero(1), 8));
  Trajectory nom = rollout(*model, Vector::Zero(2), VectorSeq(8, Vector::Ones(1)), Vector());
  DdpOptions full;
  full.full_second_order = true;
  const DdpWorkspace a = backward_pass(*model, cost, nom, Vector(), 0.0);
  const DdpWorkspace b = backward_pass(*model, cost, nom, Vector(), 0.0, full);
  for (int k = 0; k < 8; ++k) {
    EXPECT_LT((a.K[k] - b.K[k]).norm(), 1e-12);
    EXPECT_LT((a.Vxx[k] - b.Vxx[k]).norm(), 1e-12);
    EXPECT_LT((a.Quu[k] * a.Quu_inv[k] - Matrix::Identity(1, 1)).norm(), 1e-10);
  }
}

TEST(DdpForwardPass, ZeroFeedforwardReturnsNominal) {
  auto model = make_double_integrator(1, 0.1);
  auto cost = AugmentedCost::plain(
      QuadraticCost::tracking(Vector::Ones(2), Vector::Ones(1), Vector::Ones(2), Vector::Zero(2), Vector::Zero(1), 5));
  Trajectory nom = Trajectory::zeros(2, 1, 5);
  const DdpWorkspace ws = backward_pass(*model, cost, nom, Vector(), 0.0);
  const ForwardPassResult fp = forward_pass(*model, cost, nom, cost.total(nom), ws, Vector());
  EXPECT_TRUE(fp.stalled);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(fp.trajectory.controls[k], nom.controls[k]);
}

TEST(DdpSolve, EquilibriumIsReturnedUnchanged) {
  auto model = make_double_integrator(1, 0.1);
  Vector x0(2);
  x0 << 0.7, 0.0;
  auto cost = AugmentedCost::plain(QuadraticCost::tracking(Vector::Ones(2), Vector::Ones(1), Vector::Ones(2), x0,
                                                           Vector::Zero(1), 10));
  Trajectory init = rollout(*model, x0, VectorSeq(10, Vector::Zero(1)), Vector());
  const DdpResult r = ddp_solve(*model, cost, init, Vector());
  EXPECT_EQ(r.report.iterations, 0);
  for (const auto& u : r.trajectory.controls) EXPECT_EQ(u.norm(), 0.0);
}

class DdpDenseQp : public ::testing::TestWithParam<int> {};

TEST_P(DdpDenseQp, LinearQuadraticMatchesDenseKkt) {
  std::mt19937_64 rng(100 + GetParam());
  std::uniform_int_distribution<int> dim(1, 4), hor(1, 20);
  std::uniform_real_distribution<double> U(-1, 1), W(0.1, 3.0);
  const int n = dim(rng), m = dim(rng), N = hor(rng);
  Matrix A = Matrix::Identity(n, n) + 0.3 * Matrix::NullaryExpr(n, n, [&] { return U(rng); });
  Matrix B = Matrix::NullaryExpr(n, m, [&] { return U(rng); });
  LinearAgent model(A, B);
  AugmentedCost cost;
  cost.base.q = Vector::NullaryExpr(n, [&] { return W(rng); });
  cost.base.r = Vector::NullaryExpr(m, [&] { return W(rng); });
  cost.base.qN = Vector::NullaryExpr(n, [&] { return W(rng); });
  for (int k = 0; k <= N; ++k) cost.base.x_ref.push_back(Vector::NullaryExpr(n, [&] { return U(rng); }));
  for (int k = 0; k < N; ++k) cost.base.u_ref.push_back(Vector::NullaryExpr(m, [&] { return U(rng); }));
  if (GetParam() % 2 == 0) {
    cost.rho = W(rng);
    for (int k = 0; k <= N; ++k) {
      cost.x_copy.push_back(Vector::NullaryExpr(n, [&] { return U(rng); }));
      cost.lambda.push_back(Vector::NullaryExpr(n, [&] { return U(rng); }));
    }
    for (int k = 0; k < N; ++k) {
      cost.u_copy.push_back(Vector::NullaryExpr(m, [&] { return U(rng); }));
      cost.xi.push_back(Vector::NullaryExpr(m, [&] { return U(rng); }));
    }
  }
  Trajectory init = Trajectory::zeros(n, m, N);
  init.states[0] = Vector::NullaryExpr(n, [&] { return U(rng); });
  const DdpResult r = ddp_solve(model, cost, init, Vector());
  const Trajectory ref = dense_lq_optimum(model, cost, init.states[0]);
  EXPECT_LT(traj_rel_err(r.trajectory, ref), 1e-8);
  EXPECT_LE(r.report.iterations, 1);  // LQR exactness: one sweep
  for (int k = 0; k < N; ++k) EXPECT_LE(r.workspace.Qu[k].norm(), 10 * 1e-6);
  for (std::size_t i = 1; i < r.report.cost_history.size(); ++i)
    EXPECT_LE(r.report.cost_history[i], r.report.cost_history[i - 1]);
}

INSTANTIATE_TEST_SUITE_P(Random, DdpDenseQp, ::testing::Range(0, 12));

TEST(DdpSolve, PenaltyPullsTowardCopiesMonotonically) {
  // Scalar integrator tracking 0, copies offset by delta = 1 at every step.
  auto model = make_linear_test_agent(1, 1, Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  const int N = 5;
  double prev_gap = 1e9;
  for (double rho : {1.0, 10.0, 100.0, 1000.0}) {
    AugmentedCost c;
    c.base = QuadraticCost::tracking(Vector::Ones(1), Vector::Ones(1), Vector::Ones(1), Vector::Zero(1),
                                     Vector::Zero(1), N);
    c.rho = rho;
    c.x_copy.assign(N + 1, Vector::Ones(1));
    c.lambda.assign(N + 1, Vector::Zero(1));
    c.u_copy.assign(N, Vector::Zero(1));
    c.xi.assign(N, Vector::Zero(1));
    Trajectory init = Trajectory::zeros(1, 1, N);
    init.states[0](0) = 1.0;
    const DdpResult r = ddp_solve(*model, c, init, Vector());
    double gap = 0;
    for (int k = 0; k <= N; ++k) gap += std::abs(r.trajectory.states[k](0) - 1.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
    // Solution lies between base optimum (0) and the copies (1).
    for (int k = 1; k <= N; ++k) {
      EXPECT_GT(r.trajectory.states[k](0), 0.0);
      EXPECT_LT(r.trajectory.states[k](0), 1.0);
    }
  }
  EXPECT_LT(prev_gap, 0.01);
}

TEST(AugmentedCost, ReducesToBaseWhenPenaltyTermsVanish) {
  AugmentedCost c;
  c.base = QuadraticCost::tracking(Vector::Ones(2), Vector::Ones(1), Vector::Ones(2), Vector::Ones(2),
                                   Vector::Zero(1), 3);
  Trajectory t = Trajectory::zeros(2, 1, 3);
  t.states[2] << 0.3, -0.2;
  c.rho = 5.0;
  c.x_copy = t.states;
  c.u_copy = t.controls;
  c.lambda.assign(4, Vector::Zero(2));
  c.xi.assign(3, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(c.total(t), c.base.total(t));
}

}  // namespace
}  // namespace l2c
