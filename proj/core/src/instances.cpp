#include "l2c/instances.hpp"

namespace l2c {

Problem make_consensus_toy(const ConsensusToyOptions& opts) {
  const int N = opts.horizon;
  Problem pb;
  pb.horizon = N;
  auto model = make_double_integrator(1, opts.dt);
  const double targets[2] = {1.0, -1.0};
  for (int i = 0; i < 2; ++i) {
    AgentSpec a;
    a.name = "agent" + std::to_string(i);
    a.model = model;
    Vector xr(2);
    xr << targets[i], 0.0;
    a.cost = QuadraticCost::tracking(Vector::Ones(2), Vector::Ones(1), Vector::Ones(2), xr, Vector::Zero(1), N);
    const std::string pre = "agent" + std::to_string(i) + ".";
    a.binding.q = pb.layout.add(pre + "Q", 2);
    a.binding.r = pb.layout.add(pre + "R", 1);
    a.binding.qN = pb.layout.add(pre + "QN", 2);
    a.binding.rho = pb.layout.add(pre + "rho", 1);
    a.x0 = Vector::Zero(2);
    a.x0(0) = 0.5 * targets[i];
    pb.agents.push_back(std::move(a));
  }
  pb.stages.resize(N + 1);
  // Stage vector at N: [x_0 (2); x_1 (2)].
  pb.stages[N].costs.push_back(std::make_shared<CouplingPenalty>(std::vector<int>{0, 1}, std::vector<int>{2, 3},
                                                                 opts.coupling, "terminal_agreement"));
  if (opts.position_bound > 0) {
    for (int k = 0; k <= N; ++k) {
      Vector a(1);
      a << 1.0;
      pb.stages[k].constraints.push_back(
          std::make_shared<LinearInequality>(std::vector<int>{0}, a, opts.position_bound, "agent0_position_bound"));
    }
  }
  return pb;
}

HyperParams consensus_toy_theta(const Problem& toy) {
  Vector theta(toy.layout.size());
  // Q, R, QN, rho per agent
  // Cost curvature well above rho keeps the proximal ADMM contraction fast.
  theta << 200.0, 50.0, 30.0, 900.0, 200.0, 10.0,  //
      150.0, 40.0, 20.0, 900.0, 100.0, 10.0;
  return hyper_params_from_theta(theta, toy.layout);
}

RandomLqrInstance random_aux_lqr_instance(int n, int m, int p, int N, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> W(0.1, 2.0);
  auto rand_mat = [&](int r, int c, double s) {
    Matrix M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = s * U(rng);
    return M;
  };
  auto rand_vec = [&](int r, double s) -> Vector { return rand_mat(r, 1, s); };
  auto rand_pos = [&](int r) {
    Vector v(r);
    for (int i = 0; i < r; ++i) v(i) = W(rng);
    return v;
  };

  Matrix A = Matrix::Identity(n, n) + rand_mat(n, n, 0.3);
  Matrix B = rand_mat(n, m, 1.0);
  LinearAgent model(A, B);
  QuadraticCost base;
  base.q = rand_pos(n);
  base.r = rand_pos(m);
  base.qN = rand_pos(n);
  for (int k = 0; k <= N; ++k) base.x_ref.push_back(rand_vec(n, 1.0));
  for (int k = 0; k < N; ++k) base.u_ref.push_back(rand_vec(m, 1.0));
  AugmentedCost cost;
  cost.base = base;
  cost.rho = W(rng);
  for (int k = 0; k <= N; ++k) {
    cost.x_copy.push_back(rand_vec(n, 1.0));
    cost.lambda.push_back(rand_vec(n, 0.5));
  }
  for (int k = 0; k < N; ++k) {
    cost.u_copy.push_back(rand_vec(m, 1.0));
    cost.xi.push_back(rand_vec(m, 0.5));
  }
  Trajectory init = Trajectory::zeros(n, m, N);
  init.states[0] = rand_vec(n, 1.0);
  const Vector theta = Vector::Zero(p);
  DdpResult r = ddp_solve(model, cost, init, theta);

  RandomLqrInstance inst;
  inst.workspace = r.workspace;
  hessians_from_workspace(r.workspace, inst.aux);
  for (int k = 0; k <= N; ++k) inst.aux.Hxtheta.push_back(rand_mat(n, p, 1.0));
  for (int k = 0; k < N; ++k) {
    inst.aux.Hutheta.push_back(rand_mat(m, p, 1.0));
    inst.aux.ftheta.push_back(rand_mat(n, p, 0.3));
  }
  return inst;
}

}  // namespace l2c
