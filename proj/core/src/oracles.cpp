#include "l2c/gradsolver.hpp"

#include <cmath>

namespace l2c {

AuxLqrSolution aux_lqr_pmp_oracle(const AuxLqrData& aux) {
  aux.validate();
  const int N = aux.horizon();
  const int n = static_cast<int>(aux.fx.front().rows());
  const int p = aux.cols();
  const Matrix In = Matrix::Identity(n, n);

  // Lambda_k = P_k X_k + W_k
  MatrixSeq P(N + 1), W(N + 1), Abar(N), Rbar(N), Mbar(N), HuuInv(N);
  P[N] = aux.Hxx[N];
  W[N] = aux.Hxtheta[N];
  for (int k = N - 1; k >= 0; --k) {
    Eigen::LLT<Matrix> llt(aux.Huu[k]);
    if (llt.info() != Eigen::Success) throw SolverError("PMP oracle: H_uu not positive definite at step " + std::to_string(k));
    HuuInv[k] = llt.solve(Matrix::Identity(aux.Huu[k].rows(), aux.Huu[k].cols()));
    const Matrix Hux = aux.Hxu[k].transpose();
    Abar[k] = aux.fx[k] - aux.fu[k] * HuuInv[k] * Hux;
    Rbar[k] = aux.fu[k] * HuuInv[k] * aux.fu[k].transpose();
    Mbar[k] = -aux.fu[k] * (HuuInv[k] * aux.Hutheta[k]);
    if (!aux.ftheta.empty() && aux.ftheta[k].size() > 0) Mbar[k] += aux.ftheta[k];
    const Matrix Qbar = aux.Hxx[k] - aux.Hxu[k] * HuuInv[k] * Hux;
    const Matrix Nbar = aux.Hxtheta[k] - aux.Hxu[k] * (HuuInv[k] * aux.Hutheta[k]);

    Eigen::PartialPivLU<Matrix> lu(In + Rbar[k] * P[k + 1]);
    const Matrix S = P[k + 1] * lu.inverse();  // P' (I + Rbar P')^{-1}
    P[k] = Qbar + Abar[k].transpose() * S * Abar[k];
    P[k] = 0.5 * (P[k] + P[k].transpose()).eval();
    W[k] = Nbar + Abar[k].transpose() * (S * (Mbar[k] - Rbar[k] * W[k + 1]) + W[k + 1]);
  }

  AuxLqrSolution sol;
  sol.X.resize(N + 1);
  sol.U.resize(N);
  sol.X[0] = Matrix::Zero(n, p);
  for (int k = 0; k < N; ++k) {
    Eigen::PartialPivLU<Matrix> lu(In + Rbar[k] * P[k + 1]);
    sol.X[k + 1] = lu.solve(Abar[k] * sol.X[k] - Rbar[k] * W[k + 1] + Mbar[k]);
    const Matrix Lam = P[k + 1] * sol.X[k + 1] + W[k + 1];
    sol.U[k] = -HuuInv[k] * (aux.Hxu[k].transpose() * sol.X[k] + aux.Hutheta[k] + aux.fu[k].transpose() * Lam);
  }
  return sol;
}

AuxLqrSolution aux_lqr_augmented_oracle(const AuxLqrData& aux, AugmentedOracleStats* stats) {
  aux.validate();
  const int N = aux.horizon();
  const int n = static_cast<int>(aux.fx.front().rows());
  const int m = static_cast<int>(aux.fu.front().cols());
  const int p = aux.cols();
  const int ny = n + p;

  auto Hyy = [&](int k) {
    Matrix H = Matrix::Zero(ny, ny);
    H.topLeftCorner(n, n) = aux.Hxx[k];
    H.topRightCorner(n, p) = aux.Hxtheta[k];
    H.bottomLeftCorner(p, n) = aux.Hxtheta[k].transpose();
    return H;
  };

  MatrixSeq Ky(N);
  Matrix Vyy = Hyy(N);
  if (stats) {
    stats->vthth_blocks = 1;
    stats->vthth_dim = p;
  }
  Matrix F = Matrix::Zero(ny, ny);
  F.bottomRightCorner(p, p).setIdentity();
  Matrix G = Matrix::Zero(ny, m);
  for (int k = N - 1; k >= 0; --k) {
    F.topLeftCorner(n, n) = aux.fx[k];
    F.topRightCorner(n, p).setZero();
    if (!aux.ftheta.empty() && aux.ftheta[k].size() > 0) F.topRightCorner(n, p) = aux.ftheta[k];
    G.topRows(n) = aux.fu[k];
    Matrix Hyu = Matrix::Zero(ny, m);
    Hyu.topRows(n) = aux.Hxu[k];
    Hyu.bottomRows(p) = aux.Hutheta[k].transpose();

    const Matrix VF = Vyy * F;
    const Matrix VG = Vyy * G;
    const Matrix Qyy = Hyy(k) + F.transpose() * VF;
    const Matrix Qyu = Hyu + F.transpose() * VG;
    Matrix Quu = aux.Huu[k] + G.transpose() * VG;
    Quu = 0.5 * (Quu + Quu.transpose()).eval();
    Eigen::LLT<Matrix> llt(Quu);
    if (llt.info() != Eigen::Success) throw SolverError("augmented oracle: Q_uu not positive definite at step " + std::to_string(k));
    Ky[k] = -llt.solve(Qyu.transpose());
    Vyy = Qyy + Qyu * Ky[k];
    Vyy = 0.5 * (Vyy + Vyy.transpose()).eval();
    if (stats) ++stats->vthth_blocks;  // V_thth = Vyy.bottomRightCorner(p, p)
  }

  AuxLqrSolution sol;
  sol.X.resize(N + 1);
  sol.U.resize(N);
  Matrix Y = Matrix::Zero(ny, p);
  Y.bottomRows(p).setIdentity();
  sol.X[0] = Y.topRows(n);
  for (int k = 0; k < N; ++k) {
    sol.U[k] = Ky[k] * Y;
    Matrix Xn = aux.fx[k] * Y.topRows(n) + aux.fu[k] * sol.U[k];
    if (!aux.ftheta.empty() && aux.ftheta[k].size() > 0) Xn += aux.ftheta[k];
    Y.topRows(n) = Xn;
    sol.X[k + 1] = std::move(Xn);
  }
  return sol;
}

double mean_step_relative_error(const MatrixSeq& A, const MatrixSeq& B) {
  if (A.size() != B.size() || A.size() < 2) throw ConfigError("error metric: sequences must match and span a horizon");
  const int N = static_cast<int>(A.size()) - 1;
  double acc = 0.0;
  for (int k = 1; k <= N; ++k) {
    const double num = (A[k] - B[k]).norm();
    const double den = A[k].norm();
    if (num == 0.0) continue;
    acc += den > 0.0 ? num / den : 1.0;
  }
  return acc / N;
}

double relative_frobenius(const MatrixSeq& A, const MatrixSeq& B) {
  if (A.size() != B.size()) throw ConfigError("relative error: sequence lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    num += (A[k] - B[k]).squaredNorm();
    den += A[k].squaredNorm();
  }
  if (num == 0.0) return 0.0;
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

GradIterate pipeline_finite_difference(const Problem& problem, const HyperParams& hp, int a_max,
                                       const AdmmOptions& opts, double h_rel, const std::vector<int>& columns) {
  const int p = hp.theta.size();
  const int N = problem.horizon;
  const AdmmState init = admm_initial_state(problem, hp);
  GradIterate g = zero_grad_iterate(problem, p);
  g.index = a_max;
  std::vector<int> cols = columns;
  if (cols.empty())
    for (int j = 0; j < p; ++j) cols.push_back(j);

  for (int j : cols) {
    const double h = h_rel * std::max(1.0, std::abs(hp.theta(j)));
    HyperParams plus = hp, minus = hp;
    plus.theta(j) += h;
    minus.theta(j) -= h;
    const AdmmResult rp = admm_run(problem, plus, a_max, init, opts);
    const AdmmResult rm = admm_run(problem, minus, a_max, init, opts);
    const auto& ap = rp.iterates.back().agents;
    const auto& am = rm.iterates.back().agents;
    for (int i = 0; i < problem.num_agents(); ++i) {
      AgentGrad& ag = g.agents[i];
      for (int k = 0; k <= N; ++k) {
        ag.X[k].col(j) = (ap[i].primal.states[k] - am[i].primal.states[k]) / (2 * h);
        ag.Xc[k].col(j) = (ap[i].copy.states[k] - am[i].copy.states[k]) / (2 * h);
        ag.dlambda[k].col(j) = (ap[i].lambda[k] - am[i].lambda[k]) / (2 * h);
      }
      for (int k = 0; k < N; ++k) {
        ag.U[k].col(j) = (ap[i].primal.controls[k] - am[i].primal.controls[k]) / (2 * h);
        ag.Uc[k].col(j) = (ap[i].copy.controls[k] - am[i].copy.controls[k]) / (2 * h);
        ag.dxi[k].col(j) = (ap[i].xi[k] - am[i].xi[k]) / (2 * h);
      }
    }
  }
  return g;
}

}  // namespace l2c
