#include <gtest/gtest.h>

#include <l2c/instances.hpp>
#include <l2c/meta.hpp>
#include <l2c/training.hpp>

#include <cstdio>
#include <filesystem>

namespace l2c {
namespace {

TEST(Mlp, ZeroParametersOutputOneHalf) {
  Mlp net({2, 16, 32, 33});
  const Vector y = net.forward(Vector::Constant(2, 0.7));
  EXPECT_TRUE(y.isApprox(Vector::Constant(33, 0.5)));
}

TEST(Mlp, ParameterCountsOfTheThreeNetworks) {
  EXPECT_EQ(Mlp(reference_net_dims()).param_count(), 1764);
  EXPECT_EQ(Mlp(load_net_dims()).param_count(), 1681);
  EXPECT_EQ(Mlp(cable_net_dims()).param_count(), 691);
}

TEST(Mlp, InitializationStaysWithinFanInBound) {
  std::mt19937_64 rng(3);
  const Mlp net = Mlp::random({4, 9, 2}, rng);
  const Vector& p = net.params();
  EXPECT_LE(p.head(4 * 9 + 9).cwiseAbs().maxCoeff(), 0.5);
  EXPECT_LE(p.tail(9 * 2 + 2).cwiseAbs().maxCoeff(), 1.0 / 3.0);
}

TEST(Mlp, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  Mlp net = Mlp::random({2, 10, 20, 21}, rng);
  const Vector x = (Vector(2) << 0.3, -0.8).finished();
  Matrix J;
  net.forward(x, &J);
  ASSERT_EQ(J.rows(), 21);
  ASSERT_EQ(J.cols(), net.param_count());
  const Vector p0 = net.params();
  const double h = 1e-6;
  Matrix fd(J.rows(), J.cols());
  for (int j = 0; j < p0.size(); ++j) {
    Vector p = p0;
    p(j) += h;
    net.set_params(p);
    const Vector yp = net.forward(x);
    p(j) -= 2 * h;
    net.set_params(p);
    fd.col(j) = (yp - net.forward(x)) / (2 * h);
  }
  EXPECT_LT((fd - J).norm() / J.norm(), 1e-5);
}

TEST(Mlp, RejectsWrongParameterLength) {
  Mlp net({1, 3, 1});
  EXPECT_THROW(net.set_params(Vector::Zero(3)), Error);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Vector w = Vector::Constant(3, 0.4);
  AdamState s;
  adam_step(w, Vector::Zero(3), s);
  EXPECT_EQ(w, Vector::Constant(3, 0.4));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Vector w = Vector::Zero(2);
  AdamState s;
  adam_step(w, (Vector(2) << 3.0, -0.02).finished(), s);
  EXPECT_NEAR(w(0), -1e-3, 1e-9);
  EXPECT_NEAR(w(1), 1e-3, 1e-6);
}

TEST(Adam, MinimizesSquare) {
  Vector w = Vector::Constant(1, 1.0);
  AdamState s;
  AdamOptions o;
  o.lr = 0.1;
  for (int i = 0; i < 100; ++i) adam_step(w, 2.0 * w, s, o);
  EXPECT_LT(std::abs(w(0)), 0.05);
}

TEST(Adam, NonFiniteGradientThrows) {
  Vector w = Vector::Zero(1);
  AdamState s;
  EXPECT_THROW(adam_step(w, Vector::Constant(1, NAN), s), TrainingError);
}

Trajectory constant_trajectory(int N, const Vector& x, const Vector& u) {
  Trajectory t;
  t.states.assign(N + 1, x);
  t.controls.assign(N, u);
  return t;
}

TEST(UpperLoss, ZeroAtReferenceWithConsensus) {
  const Trajectory t = constant_trajectory(4, Vector::Constant(2, 1.0), Vector::Constant(1, -1.0));
  const TrackingTarget tgt{t.states, t.controls, Vector::Ones(2), Vector::Ones(1)};
  const UpperLoss L = upper_loss({t}, {t}, {tgt});
  EXPECT_EQ(L.total, 0.0);
}

TEST(UpperLoss, SingleOffsetGivesSquare) {
  const Trajectory ref = constant_trajectory(4, Vector::Zero(2), Vector::Zero(1));
  Trajectory p = ref;
  const double delta = 0.3;
  p.states[2](0) = delta;
  const TrackingTarget tgt{ref.states, ref.controls, Vector::Ones(2), Vector::Ones(1)};
  const UpperLoss L = upper_loss({p}, {p}, {tgt});
  EXPECT_NEAR(L.agents[0].tracking, delta * delta, 1e-15);
  EXPECT_EQ(L.agents[0].residual, 0.0);
  const UpperLoss R = upper_loss({p}, {ref}, {tgt});
  EXPECT_NEAR(R.agents[0].residual, delta * delta, 1e-15);
}

TEST(UpperLoss, PartialsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  auto rnd = [&](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
  };
  Trajectory p = constant_trajectory(3, Vector::Zero(3), Vector::Zero(2));
  Trajectory c = p;
  TrackingTarget tgt{p.states, p.controls, rnd(3).cwiseAbs(), rnd(2).cwiseAbs()};
  for (auto& x : p.states) x = rnd(3);
  for (auto& x : c.states) x = rnd(3);
  for (auto& u : p.controls) u = rnd(2);
  for (auto& u : c.controls) u = rnd(2);
  const UpperLoss L = upper_loss({p}, {c}, {tgt});
  const double h = 1e-6;
  for (int k = 0; k <= 3; ++k) {
    for (int i = 0; i < 3; ++i) {
      Trajectory a = p, b = p;
      a.states[k](i) += h;
      b.states[k](i) -= h;
      const double fd = (upper_loss({a}, {c}, {tgt}).total - upper_loss({b}, {c}, {tgt}).total) / (2 * h);
      EXPECT_NEAR(L.agents[0].dx[k](i), fd, 1e-6);
      Trajectory ca = c, cb = c;
      ca.states[k](i) += h;
      cb.states[k](i) -= h;
      const double fdc = (upper_loss({p}, {ca}, {tgt}).total - upper_loss({p}, {cb}, {tgt}).total) / (2 * h);
      EXPECT_NEAR(L.agents[0].dxc[k](i), fdc, 1e-6);
    }
  }
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 2; ++i) {
      Trajectory a = p, b = p;
      a.controls[k](i) += h;
      b.controls[k](i) -= h;
      const double fd = (upper_loss({a}, {c}, {tgt}).total - upper_loss({b}, {c}, {tgt}).total) / (2 * h);
      EXPECT_NEAR(L.agents[0].du[k](i), fd, 1e-6);
    }
  }
}

AgentGrad random_agent_grad(int N, int n, int m, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  auto rnd = [&](int r, int c) {
    Matrix M(r, c);
    for (int i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
    return M;
  };
  AgentGrad g;
  for (int k = 0; k <= N; ++k) {
    g.X.push_back(rnd(n, p));
    g.Xc.push_back(rnd(n, p));
  }
  for (int k = 0; k < N; ++k) {
    g.U.push_back(rnd(m, p));
    g.Uc.push_back(rnd(m, p));
  }
  return g;
}

TEST(AssembleGrad, ZeroLossPartialsGiveZero) {
  std::mt19937_64 rng(8);
  const Trajectory t = constant_trajectory(3, Vector::Zero(2), Vector::Zero(1));
  const TrackingTarget tgt{t.states, t.controls, Vector::Ones(2), Vector::Ones(1)};
  const UpperLoss L = upper_loss({t}, {t}, {tgt});
  GradIterate g;
  g.agents.push_back(random_agent_grad(3, 2, 1, 5, rng));
  const Vector d = assemble_grad(L, g, Vector::Ones(5), Matrix::Ones(5, 7), 0);
  EXPECT_EQ(d, Vector::Zero(7));
}

TEST(AssembleGrad, SharedCableColumnsScaleWithTeamSize) {
  // n identical cable agents driven by the same theta slice contribute n times one agent.
  std::mt19937_64 rng(9);
  const int N = 3, p = 6, n = 3;
  Trajectory a = constant_trajectory(N, Vector::Constant(2, 0.5), Vector::Constant(1, -0.2));
  Trajectory c = constant_trajectory(N, Vector::Zero(2), Vector::Zero(1));
  const TrackingTarget tgt{c.states, c.controls, Vector::Ones(2), Vector::Ones(1)};
  const AgentGrad G = random_agent_grad(N, 2, 1, p, rng);
  GradIterate one, many;
  one.agents = {G};
  many.agents.assign(n, G);
  const Matrix J = Matrix::Random(2, 4);
  const Vector d1 = assemble_grad(upper_loss({a}, {c}, {tgt}), one, Vector::Ones(p), J, 4);
  const Vector dn = assemble_grad(upper_loss({a, a, a}, {c, c, c}, {tgt, tgt, tgt}), many, Vector::Ones(p), J, 4);
  EXPECT_TRUE(dn.isApprox(n * d1, 1e-12));
}

TEST(AssembleGrad, ConsensusToyEndToEndMatchesFiniteDifferences) {
  const Problem pb = make_consensus_toy();
  const ThetaLayout layout = consensus_toy_theta(pb).layout;
  std::mt19937_64 rng(21);
  Mlp net = Mlp::random({1, 6, layout.size()}, rng);
  const Vector input = Vector::Constant(1, 0.4);
  const int a_max = 5;
  std::vector<TrackingTarget> targets;
  for (const auto& ag : pb.agents) {
    const int N = ag.cost.horizon();
    targets.push_back({VectorSeq(N + 1, Vector::Zero(ag.model->state_dim())),
                       VectorSeq(N, Vector::Zero(ag.model->control_dim())),
                       Vector::Ones(ag.model->state_dim()), Vector::Ones(ag.model->control_dim())});
  }
  auto loss_at = [&](const Vector& params) {
    Mlp m = net;
    m.set_params(params);
    const HyperParams hp = map_theta(m.forward(input), layout);
    return upper_loss(admm_run(pb, hp, a_max).iterates.back(), targets).total;
  };
  Matrix J;
  const HyperParams hp = map_theta(net.forward(input, &J), layout);
  const AdmmResult fwd = admm_run(pb, hp, a_max);
  const UpperLoss L = upper_loss(fwd.iterates.back(), targets);
  const Vector g = assemble_grad(L, gradsolver_run(pb, hp, fwd).final, hp.dtheta_draw(), J, 0);

  const Vector p0 = net.params();
  for (int j : {0, 3, 7, 20, static_cast<int>(p0.size()) - 1}) {
    const double h = 1e-5 * std::max(1.0, std::abs(p0(j)));
    Vector pp = p0, pm = p0;
    pp(j) += h;
    pm(j) -= h;
    const double fd = (loss_at(pp) - loss_at(pm)) / (2 * h);
    EXPECT_NEAR(g(j), fd, 1e-2 * std::max(std::abs(fd), 1e-3)) << "param " << j;
  }
}

TEST(Training, TaskSamplingIsSeededAndBounded) {
  const auto a = sample_tasks(50, 0.04, 5);
  const auto b = sample_tasks(50, 0.04, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].r_g, b[i].r_g);
    EXPECT_LE(a[i].r_g.norm(), 0.04);
    EXPECT_EQ(a[i].r_g.z(), 0.0);
    EXPECT_NEAR(a[i].input_ref(0), a[i].r_g.norm() / 0.04, 1e-15);
  }
}

TEST(Training, FixedAblationStartsAtNetworkOutputs) {
  const HyperModel adaptive = HyperModel::initial(true, 3);
  const HyperModel fixed = HyperModel::initial(false, 3);
  const TaskSpec zero = make_task(Vec3::Zero(), 0.04);
  EXPECT_TRUE(adaptive.reference_theta(zero).theta.isApprox(fixed.reference_theta(zero).theta, 1e-10));
  EXPECT_TRUE(adaptive.full_theta(zero).theta.isApprox(fixed.full_theta(zero).theta, 1e-10));
}

TrainingConfig tiny_config() {
  TrainingConfig c;
  c.tasks = 2;
  c.episodes_reference = 1;
  c.episodes = 1;
  c.reference_iters = 3;
  c.adam.lr = 1e-2;
  return c;
}

TEST(Training, LossCurvesHaveFinalEvaluationAndAreDeterministic) {
  const TrainingResult a = train(tiny_config());
  TrainingConfig c2 = tiny_config();
  c2.threads = 2;
  const TrainingResult b = train(c2);
  ASSERT_EQ(a.loss_reference.size(), 2u);
  ASSERT_EQ(a.loss.size(), 2u);
  EXPECT_EQ(a.loss_reference, b.loss_reference);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.model.net_l.params(), b.model.net_l.params());
}

TEST(Training, CheckpointRoundTrip) {
  const TrainingResult a = train(tiny_config());
  const auto path = std::filesystem::temp_directory_path() / "l2c_ckpt_roundtrip.json";
  save_checkpoint(path.string(), a);
  const TrainingResult b = load_checkpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.loss_reference, b.loss_reference);
  EXPECT_EQ(a.model.net_ls.params(), b.model.net_ls.params());
  EXPECT_EQ(a.model.net_c.params(), b.model.net_c.params());
  EXPECT_EQ(a.model.phi, b.model.phi);
  EXPECT_EQ(a.adam_l.t, b.adam_l.t);
  EXPECT_EQ(a.adam_c.v, b.adam_c.v);
}

TEST(Training, MissingCheckpointIsConfigError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), ConfigError);
}

}  // namespace
}  // namespace l2c
