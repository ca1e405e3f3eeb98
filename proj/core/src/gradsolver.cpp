#include "l2c/gradsolver.hpp"
#include "l2c/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace l2c {

void AuxLqrData::validate() const {
  const int N = horizon();
  if (static_cast<int>(Hxx.size()) != N + 1 || static_cast<int>(Hxtheta.size()) != N + 1 ||
      static_cast<int>(Hxu.size()) != N || static_cast<int>(Hutheta.size()) != N ||
      static_cast<int>(fx.size()) != N || static_cast<int>(fu.size()) != N)
    throw ConfigError("aux LQR: sequence lengths inconsistent with horizon");
  const int p = cols();
  for (int k = 0; k <= N; ++k)
    if (Hxtheta[k].cols() != p) throw ConfigError("aux LQR: H_xtheta column count differs from theta layout");
  for (int k = 0; k < N; ++k) {
    if (Hutheta[k].cols() != p) throw ConfigError("aux LQR: H_utheta column count differs from theta layout");
    if (!ftheta.empty() && ftheta[k].size() > 0 && ftheta[k].cols() != p)
      throw ConfigError("aux LQR: f_theta column count differs from theta layout");
  }
}

namespace {
bool has_ftheta(const AuxLqrData& aux, int k) {
  return !aux.ftheta.empty() && aux.ftheta[k].size() > 0;
}
}  // namespace

void hessians_from_workspace(const DdpWorkspace& ws, AuxLqrData& aux) {
  const int N = ws.horizon();
  aux.Hxx.resize(N + 1);
  aux.Hxu.resize(N);
  aux.Huu.resize(N);
  aux.fx = ws.fx;
  aux.fu = ws.fu;
  for (int k = 0; k < N; ++k) {
    const Matrix VF = ws.Vxx[k + 1] * ws.fx[k];
    const Matrix VG = ws.Vxx[k + 1] * ws.fu[k];
    aux.Hxx[k] = ws.Qxx[k] - ws.fx[k].transpose() * VF;
    aux.Hxu[k] = ws.Qxu[k] - ws.fx[k].transpose() * VG;
    aux.Huu[k] = ws.Quu[k] - ws.fu[k].transpose() * VG;
    aux.Hxx[k] = 0.5 * (aux.Hxx[k] + aux.Hxx[k].transpose()).eval();
    aux.Huu[k] = 0.5 * (aux.Huu[k] + aux.Huu[k].transpose()).eval();
  }
  aux.Hxx[N] = ws.Vxx[N];
}

AuxLqrSolution aux_lqr_reuse(const AuxLqrData& aux, const DdpWorkspace& ws) {
  const int N = aux.horizon();
  if (ws.horizon() != N) throw ConfigError("aux LQR reuse: workspace horizon differs");
  if (static_cast<int>(aux.Hxtheta.size()) != N + 1 || static_cast<int>(aux.Hutheta.size()) != N)
    throw ConfigError("aux LQR reuse: coupling sequences have wrong length");
  const int p = aux.cols();

  MatrixSeq Kff(N);
  Matrix Vxth = aux.Hxtheta[N];
  for (int k = N - 1; k >= 0; --k) {
    if (aux.Hutheta[k].cols() != p || aux.Hxtheta[k].cols() != p)
      throw ConfigError("aux LQR reuse: column count differs from theta layout");
    Matrix W = Vxth;
    if (has_ftheta(aux, k)) W.noalias() += ws.Vxx[k + 1] * aux.ftheta[k];
    Matrix Gu = aux.Hutheta[k];
    Gu.noalias() += aux.fu[k].transpose() * W;
    Matrix Gx = aux.Hxtheta[k];
    Gx.noalias() += aux.fx[k].transpose() * W;
    Kff[k].noalias() = -ws.Quu_inv[k] * Gu;
    // -Q_xu Q_uu^-1 = K^T
    Gx.noalias() += ws.K[k].transpose() * Gu;
    Vxth = std::move(Gx);
  }

  AuxLqrSolution sol;
  sol.X.resize(N + 1);
  sol.U.resize(N);
  const int n = static_cast<int>(aux.fx.front().rows());
  sol.X[0] = Matrix::Zero(n, p);
  for (int k = 0; k < N; ++k) {
    sol.U[k] = Kff[k];
    sol.U[k].noalias() += ws.K[k] * sol.X[k];
    sol.X[k + 1].noalias() = aux.fx[k] * sol.X[k];
    sol.X[k + 1].noalias() += aux.fu[k] * sol.U[k];
    if (has_ftheta(aux, k)) sol.X[k + 1] += aux.ftheta[k];
  }
  return sol;
}

Matrix regularize_curvature(const Matrix& L, double eps_reg, double* lambda_min) {
  if (L.size() == 0 || eps_reg < 0.0) return L;
  Eigen::SelfAdjointEigenSolver<Matrix> es(L, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lambda_min) *lambda_min = lmin;
  if (lmin >= eps_reg) return L;
  Matrix out = L;
  out.diagonal().array() += eps_reg - lmin;
  return out;
}

Matrix aux_static_qp(const Matrix& L, const Vector& prox_weight, const Matrix& rhs, double eps_reg) {
  Matrix M = regularize_curvature(L, eps_reg);
  M.diagonal() += prox_weight;
  Eigen::LLT<Matrix> llt(M);
  Matrix sol;
  if (llt.info() == Eigen::Success) {
    sol = -llt.solve(rhs);
  } else {
    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible()) throw SolverError("static QP: regularized Hessian is singular");
    sol = -lu.solve(rhs);
  }
  if (!sol.allFinite()) throw SolverError("static QP: non-finite solution");
  return sol;
}

GradIterate zero_grad_iterate(const Problem& problem, int p) {
  GradIterate g;
  const int N = problem.horizon;
  for (const auto& a : problem.agents) {
    const int n = a.model->state_dim();
    const int m = a.model->control_dim();
    AgentGrad ag;
    ag.X.assign(N + 1, Matrix::Zero(n, p));
    ag.Xc = ag.X;
    ag.dlambda = ag.X;
    ag.U.assign(N, Matrix::Zero(m, p));
    ag.Uc = ag.U;
    ag.dxi = ag.U;
    g.agents.push_back(std::move(ag));
  }
  g.aux.resize(N + 1);
  for (int k = 0; k <= N; ++k) g.aux[k] = Matrix::Zero(problem.stage(k).aux_dim, p);
  return g;
}

AuxLqrData subsystem1_data(const Problem& problem, const HyperParams& hp, const AdmmState& prev,
                           const AgentIterate& it, int i, const AgentGrad* pg) {
  const AgentSpec& spec = problem.agents[i];
  const int N = problem.horizon;
  const int n = spec.model->state_dim();
  const int m = spec.model->control_dim();
  const int p = hp.theta.size();
  const QuadraticCost cost = problem.cost_for(i, hp.theta);
  const CostBinding& b = spec.binding;
  const double rho = it.rho;
  const Trajectory& tr = it.primal;
  const Trajectory& cp = prev.agents[i].copy;

  AuxLqrData aux;
  hessians_from_workspace(it.workspace, aux);
  aux.Hxtheta.assign(N + 1, Matrix::Zero(n, p));
  aux.Hutheta.assign(N, Matrix::Zero(m, p));
  aux.ftheta.resize(N);

  for (int k = 0; k <= N; ++k) {
    Matrix& Hx = aux.Hxtheta[k];
    const Vector dx = tr.states[k] - cost.x_ref[k];
    const int qoff = k < N ? b.q : b.qN;
    if (qoff >= 0)
      for (int j = 0; j < n; ++j) Hx(j, qoff + j) += dx(j);
    if (b.rho >= 0) Hx.col(b.rho) += tr.states[k] - cp.states[k];
    if (pg) Hx += -rho * pg->Xc[k] + pg->dlambda[k];
  }
  for (int k = 0; k < N; ++k) {
    Matrix& Hu = aux.Hutheta[k];
    const Vector du = tr.controls[k] - cost.u_ref[k];
    if (b.r >= 0)
      for (int j = 0; j < m; ++j) Hu(j, b.r + j) += du(j);
    if (b.rho >= 0) Hu.col(b.rho) += tr.controls[k] - cp.controls[k];
    if (pg) Hu += -rho * pg->Uc[k] + pg->dxi[k];
    Matrix ft = spec.model->jac_theta(tr.states[k], tr.controls[k], hp.theta);
    if (ft.size() > 0 && ft.cwiseAbs().maxCoeff() > 0.0) aux.ftheta[k] = std::move(ft);
  }
  return aux;
}

namespace {

// Stage curvature with the same regularization used by every consumer.
struct StageSystem {
  StageLayout layout;
  Matrix L;       // regularized non-proximal curvature
  Matrix rhs;     // explicit theta terms (without the -rho X - dlambda couplings)
  Vector weight;  // proximal diagonal
};

StageSystem build_stage_system(const Problem& problem, const HyperParams& hp, const AdmmIterate& F, int k,
                               double eps_reg) {
  StageSystem s;
  s.layout = problem.stage_layout(k);
  const StageDef& def = problem.stage(k);
  const int p = hp.theta.size();
  std::vector<Trajectory> copies;
  for (const auto& a : F.agents) copies.push_back(a.copy);
  const Vector w = stage_vector(problem, copies, F.aux[k], k);
  if (def.constraints.empty() && def.costs.empty()) {
    s.L = Matrix::Zero(s.layout.dim, s.layout.dim);
    s.rhs = Matrix::Zero(s.layout.dim, p);
  } else {
    StageCurvature c = stage_curvature(def, w, hp.theta, F.stage_mu[k]);
    s.L = regularize_curvature(c.L, eps_reg);
    s.rhs = std::move(c.L_theta);
  }
  s.weight = Vector::Zero(s.layout.dim);
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& a = F.agents[i];
    const int n = a.primal.state_dim();
    const int m = a.primal.control_dim();
    s.weight.segment(s.layout.x_offset[i], n).setConstant(a.rho);
    const int rcol = problem.agents[i].binding.rho;
    if (rcol >= 0) s.rhs.block(s.layout.x_offset[i], rcol, n, 1) -= a.primal.states[k] - a.copy.states[k];
    if (s.layout.u_offset[i] >= 0) {
      s.weight.segment(s.layout.u_offset[i], m).setConstant(a.rho);
      if (rcol >= 0) s.rhs.block(s.layout.u_offset[i], rcol, m, 1) -= a.primal.controls[k] - a.copy.controls[k];
    }
  }
  return s;
}

AdmmState state_before(const AdmmResult& fwd, int t) {
  if (t == 0) return fwd.initial;
  const AdmmIterate& it = fwd.iterates[t - 1];
  AdmmState s;
  s.iteration = it.index;
  s.aux = it.aux;
  for (const auto& a : it.agents) s.agents.push_back({a.primal, a.copy, a.lambda, a.xi});
  return s;
}

}  // namespace

void dual_grad_update(const AgentIterate& fwd, int rho_col, const AgentGrad& prev, AgentGrad& next) {
  const int N = static_cast<int>(next.U.size());
  for (int k = 0; k <= N; ++k) {
    next.dlambda[k] = prev.dlambda[k] + fwd.rho * (next.X[k] - next.Xc[k]);
    if (rho_col >= 0) next.dlambda[k].col(rho_col) += fwd.primal.states[k] - fwd.copy.states[k];
  }
  for (int k = 0; k < N; ++k) {
    next.dxi[k] = prev.dxi[k] + fwd.rho * (next.U[k] - next.Uc[k]);
    if (rho_col >= 0) next.dxi[k].col(rho_col) += fwd.primal.controls[k] - fwd.copy.controls[k];
  }
}

GradResult gradsolver_run(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                          const GradOptions& opts) {
  const int A = static_cast<int>(forward.iterates.size());
  if (A == 0) throw ConfigError("gradient solver needs at least one forward iterate");
  if (hp.theta.size() != problem.layout.size()) throw ConfigError("theta size does not match problem layout");
  const int N = problem.horizon;
  const int p = hp.theta.size();
  const int na = problem.num_agents();

  GradResult res;
  GradIterate g = zero_grad_iterate(problem, p);
  for (int t = 0; t < A; ++t) {
    const AdmmIterate& F = forward.iterates[t];
    const AdmmState prev = state_before(forward, t);
    GradIterate next = zero_grad_iterate(problem, p);
    next.index = t + 1;

    // Subsystem 1
    parallel_for(na, opts.threads, [&](int i) {
      try {
        AuxLqrData aux = subsystem1_data(problem, hp, prev, F.agents[i], i, &g.agents[i]);
        AuxLqrSolution sol = aux_lqr_reuse(aux, F.agents[i].workspace);
        next.agents[i].X = std::move(sol.X);
        next.agents[i].U = std::move(sol.U);
      } catch (const Error& e) {
        throw SolverError("gradient iteration " + std::to_string(t + 1) + ", subsystem 1, agent " +
                          std::to_string(i) + ": " + e.what());
      }
    });

    // Subsystem 2
    parallel_for(N + 1, opts.threads, [&](int k) {
      try {
        StageSystem s = build_stage_system(problem, hp, F, k, opts.eps_reg);
        for (int i = 0; i < na; ++i) {
          const double rho = F.agents[i].rho;
          const int n = static_cast<int>(next.agents[i].X[k].rows());
          s.rhs.middleRows(s.layout.x_offset[i], n) += -rho * next.agents[i].X[k] - g.agents[i].dlambda[k];
          if (s.layout.u_offset[i] >= 0) {
            const int m = static_cast<int>(next.agents[i].U[k].rows());
            s.rhs.middleRows(s.layout.u_offset[i], m) += -rho * next.agents[i].U[k] - g.agents[i].dxi[k];
          }
        }
        const Matrix sol = aux_static_qp(s.L, s.weight, s.rhs, -1.0);
        for (int i = 0; i < na; ++i) {
          const int n = static_cast<int>(next.agents[i].X[k].rows());
          next.agents[i].Xc[k] = sol.middleRows(s.layout.x_offset[i], n);
          if (s.layout.u_offset[i] >= 0) {
            const int m = static_cast<int>(next.agents[i].U[k].rows());
            next.agents[i].Uc[k] = sol.middleRows(s.layout.u_offset[i], m);
          }
        }
        if (s.layout.aux_dim > 0) next.aux[k] = sol.bottomRows(s.layout.aux_dim);
      } catch (const Error& e) {
        throw SolverError("gradient iteration " + std::to_string(t + 1) + ", subsystem 2, stage " +
                          std::to_string(k) + ": " + e.what());
      }
    });

    // Subsystem 3
    for (int i = 0; i < na; ++i)
      dual_grad_update(F.agents[i], problem.agents[i].binding.rho, g.agents[i], next.agents[i]);
    if (opts.keep_history) res.history.push_back(next);
    g = std::move(next);
  }
  res.final = std::move(g);
  return res;
}

// Shared with the centralized oracle.
Matrix stage_regularized_curvature(const Problem& problem, const HyperParams& hp, const AdmmIterate& F, int k,
                                   double eps_reg, Matrix* rhs) {
  StageSystem s = build_stage_system(problem, hp, F, k, eps_reg);
  if (rhs) *rhs = std::move(s.rhs);
  return s.L;
}

}  // namespace l2c
