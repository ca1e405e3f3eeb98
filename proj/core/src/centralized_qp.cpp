#include "l2c/gradsolver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

namespace l2c {

Matrix stage_regularized_curvature(const Problem& problem, const HyperParams& hp, const AdmmIterate& F, int k,
                                   double eps_reg, Matrix* rhs);

namespace {

// Agent blocks without the proximal rho terms, plus the explicit theta terms of the gradient.
struct AgentQp {
  AuxLqrData aux;  // Hxx/Hxu/Huu are base (rho removed), H*theta hold explicit terms only
};

AgentQp agent_qp(const Problem& problem, const HyperParams& hp, const AdmmIterate& F, int i) {
  const AgentIterate& it = F.agents[i];
  AdmmState self;
  // Explicit rho-column term uses (x - x~) of this iterate.
  for (const auto& a : F.agents) self.agents.push_back({a.primal, a.copy, a.lambda, a.xi});
  AgentQp q;
  q.aux = subsystem1_data(problem, hp, self, it, i, nullptr);
  const double rho = it.rho;
  for (auto& H : q.aux.Hxx) H.diagonal().array() -= rho;
  for (auto& H : q.aux.Huu) H.diagonal().array() -= rho;
  return q;
}

double min_eig(const Matrix& M) {
  if (M.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double centralized_qp_min_eig(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                              const GradOptions& opts) {
  const AdmmIterate& F = forward.iterates.back();
  const int N = problem.horizon;
  double lmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < problem.num_agents(); ++i) {
    const AgentQp q = agent_qp(problem, hp, F, i);
    const int n = static_cast<int>(q.aux.Hxx[0].rows());
    const int m = static_cast<int>(q.aux.Huu[0].rows());
    for (int k = 0; k < N; ++k) {
      Matrix B(n + m, n + m);
      B << q.aux.Hxx[k], q.aux.Hxu[k], q.aux.Hxu[k].transpose(), q.aux.Huu[k];
      lmin = std::min(lmin, min_eig(B));
    }
    lmin = std::min(lmin, min_eig(q.aux.Hxx[N]));
  }
  for (int k = 0; k <= N; ++k)
    lmin = std::min(lmin, min_eig(stage_regularized_curvature(problem, hp, F, k, opts.eps_reg, nullptr)));
  return lmin;
}

CentralizedQpResult centralized_qp_oracle(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                                          const GradOptions& opts) {
  if (forward.iterates.empty()) throw ConfigError("centralized oracle needs a forward iterate");
  const AdmmIterate& F = forward.iterates.back();
  const int N = problem.horizon;
  const int na = problem.num_agents();
  const int p = hp.theta.size();

  // Variable offsets: per agent [X_0..X_N, U_0..U_{N-1}], then per stage w_k.
  std::vector<int> xoff(na), uoff(na), nx(na), nu(na);
  int V = 0;
  for (int i = 0; i < na; ++i) {
    nx[i] = problem.agents[i].model->state_dim();
    nu[i] = problem.agents[i].model->control_dim();
    xoff[i] = V;
    V += (N + 1) * nx[i];
    uoff[i] = V;
    V += N * nu[i];
  }
  std::vector<int> woff(N + 1);
  std::vector<StageLayout> lay(N + 1);
  for (int k = 0; k <= N; ++k) {
    lay[k] = problem.stage_layout(k);
    woff[k] = V;
    V += lay[k].dim;
  }
  // Equalities: X_0 = 0, dynamics, X = X~, U = U~.
  int E = 0;
  for (int i = 0; i < na; ++i) E += nx[i] + N * nx[i] + (N + 1) * nx[i] + N * nu[i];

  Matrix H = Matrix::Zero(V, V);
  Matrix c = Matrix::Zero(V, p);
  Matrix A = Matrix::Zero(E, V);
  Matrix b = Matrix::Zero(E, p);

  double lmin = std::numeric_limits<double>::infinity();
  int row = 0;
  for (int i = 0; i < na; ++i) {
    const AgentQp q = agent_qp(problem, hp, F, i);
    const int n = nx[i], m = nu[i];
    for (int k = 0; k < N; ++k) {
      const int xi = xoff[i] + k * n, ui = uoff[i] + k * m;
      H.block(xi, xi, n, n) += q.aux.Hxx[k];
      H.block(xi, ui, n, m) += q.aux.Hxu[k];
      H.block(ui, xi, m, n) += q.aux.Hxu[k].transpose();
      H.block(ui, ui, m, m) += q.aux.Huu[k];
      c.middleRows(xi, n) += q.aux.Hxtheta[k];
      c.middleRows(ui, m) += q.aux.Hutheta[k];
      Matrix B(n + m, n + m);
      B << q.aux.Hxx[k], q.aux.Hxu[k], q.aux.Hxu[k].transpose(), q.aux.Huu[k];
      lmin = std::min(lmin, min_eig(B));
    }
    const int xN = xoff[i] + N * n;
    H.block(xN, xN, n, n) += q.aux.Hxx[N];
    c.middleRows(xN, n) += q.aux.Hxtheta[N];
    lmin = std::min(lmin, min_eig(q.aux.Hxx[N]));

    A.block(row, xoff[i], n, n).setIdentity();
    row += n;
    for (int k = 0; k < N; ++k) {
      A.block(row, xoff[i] + (k + 1) * n, n, n).setIdentity();
      A.block(row, xoff[i] + k * n, n, n) -= q.aux.fx[k];
      A.block(row, uoff[i] + k * m, n, m) -= q.aux.fu[k];
      if (!q.aux.ftheta.empty() && q.aux.ftheta[k].size() > 0) b.middleRows(row, n) = q.aux.ftheta[k];
      row += n;
    }
    for (int k = 0; k <= N; ++k) {
      A.block(row, xoff[i] + k * n, n, n).setIdentity();
      A.block(row, woff[k] + lay[k].x_offset[i], n, n) -= Matrix::Identity(n, n);
      row += n;
    }
    for (int k = 0; k < N; ++k) {
      A.block(row, uoff[i] + k * m, m, m).setIdentity();
      A.block(row, woff[k] + lay[k].u_offset[i], m, m) -= Matrix::Identity(m, m);
      row += m;
    }
  }
  for (int k = 0; k <= N; ++k) {
    Matrix rhs;
    const Matrix L = stage_regularized_curvature(problem, hp, F, k, opts.eps_reg, &rhs);
    H.block(woff[k], woff[k], lay[k].dim, lay[k].dim) += L;
    c.middleRows(woff[k], lay[k].dim) += rhs;
    lmin = std::min(lmin, min_eig(L));
  }

  const int D = V + E;
  Matrix KKT = Matrix::Zero(D, D);
  KKT.topLeftCorner(V, V) = H;
  KKT.topRightCorner(V, E) = A.transpose();
  KKT.bottomLeftCorner(E, V) = A;
  Matrix R(D, p);
  R.topRows(V) = -c;
  R.bottomRows(E) = b;
  Eigen::PartialPivLU<Matrix> lu(KKT);
  const Matrix z = lu.solve(R);
  if (!z.allFinite() || (KKT * z - R).norm() > 1e-6 * std::max(1.0, R.norm()))
    throw SolverError("centralized oracle: singular KKT system (Hessian lambda_min " + std::to_string(lmin) + ")");

  CentralizedQpResult out;
  out.kkt_dim = D;
  out.hessian_min_eig = lmin;
  out.grads = zero_grad_iterate(problem, p);
  out.grads.index = F.index;
  for (int i = 0; i < na; ++i) {
    AgentGrad& g = out.grads.agents[i];
    for (int k = 0; k <= N; ++k) {
      g.X[k] = z.middleRows(xoff[i] + k * nx[i], nx[i]);
      g.Xc[k] = z.middleRows(woff[k] + lay[k].x_offset[i], nx[i]);
    }
    for (int k = 0; k < N; ++k) {
      g.U[k] = z.middleRows(uoff[i] + k * nu[i], nu[i]);
      g.Uc[k] = z.middleRows(woff[k] + lay[k].u_offset[i], nu[i]);
    }
  }
  for (int k = 0; k <= N; ++k)
    if (lay[k].aux_dim > 0) out.grads.aux[k] = z.middleRows(woff[k] + lay[k].aux_offset, lay[k].aux_dim);
  return out;
}

}  // namespace l2c
