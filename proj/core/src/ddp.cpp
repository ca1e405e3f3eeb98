#include "l2c/ddp.hpp"

#include <cmath>
#include <string>

namespace l2c {

AugmentedCost AugmentedCost::plain(const QuadraticCost& base) {
  AugmentedCost c;
  c.base = base;
  return c;
}

double AugmentedCost::stage(int k, const Vector& x, const Vector& u) const {
  double c = base.stage(k, x, u);
  if (has_penalty()) {
    c += 0.5 * rho * (x - x_copy[k] + lambda[k] / rho).squaredNorm();
    c += 0.5 * rho * (u - u_copy[k] + xi[k] / rho).squaredNorm();
  }
  return c;
}

double AugmentedCost::terminal(const Vector& x) const {
  double c = base.terminal(x);
  if (has_penalty()) c += 0.5 * rho * (x - x_copy.back() + lambda.back() / rho).squaredNorm();
  return c;
}

double AugmentedCost::total(const Trajectory& t) const {
  double c = 0.0;
  for (int k = 0; k < t.horizon(); ++k) c += stage(k, t.states[k], t.controls[k]);
  return c + terminal(t.states.back());
}

void AugmentedCost::stage_derivatives(int k, const Vector& x, const Vector& u, Vector& lx,
                                      Vector& lu, Vector& lxx, Vector& luu) const {
  lx = base.q.cwiseProduct(x - base.x_ref[k]);
  lu = base.r.cwiseProduct(u - base.u_ref[k]);
  lxx = base.q;
  luu = base.r;
  if (has_penalty()) {
    lx += rho * (x - x_copy[k]) + lambda[k];
    lu += rho * (u - u_copy[k]) + xi[k];
    lxx.array() += rho;
    luu.array() += rho;
  }
}

void AugmentedCost::terminal_derivatives(const Vector& x, Vector& lx, Vector& lxx) const {
  lx = base.qN.cwiseProduct(x - base.x_ref.back());
  lxx = base.qN;
  if (has_penalty()) {
    lx += rho * (x - x_copy.back()) + lambda.back();
    lxx.array() += rho;
  }
}

double DdpWorkspace::max_feedforward() const {
  double m = 0.0;
  for (const auto& kk : k) m = std::max(m, kk.norm());
  return m;
}

Trajectory rollout(const AgentModel& model, const Vector& x0, const VectorSeq& controls,
                   const Vector& theta) {
  Trajectory t;
  t.controls = controls;
  t.states.reserve(controls.size() + 1);
  t.states.push_back(x0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    Vector next = model.step(t.states.back(), controls[k], theta);
    if (!next.allFinite()) throw RolloutError("non-finite state at step " + std::to_string(k + 1));
    t.states.push_back(std::move(next));
  }
  return t;
}

namespace {

// One sweep at a fixed regularization; returns false on a non-PD Quu.
bool sweep(const AgentModel& model, const AugmentedCost& cost, const Trajectory& nom,
           const Vector& theta, double reg, const DdpOptions& opts, DdpWorkspace& ws, int& bad_step) {
  const int N = nom.horizon();
  const int n = nom.state_dim();
  const int m = nom.control_dim();
  Vector lx, lu, lxx, luu;
  cost.terminal_derivatives(nom.states[N], lx, lxx);
  ws.Vx[N] = lx;
  ws.Vxx[N] = lxx.asDiagonal();
  Matrix hxx, hxu, huu;
  for (int k = N - 1; k >= 0; --k) {
    const Matrix& fx = ws.fx[k];
    const Matrix& fu = ws.fu[k];
    const Vector& Vx = ws.Vx[k + 1];
    const Matrix& Vxx = ws.Vxx[k + 1];
    cost.stage_derivatives(k, nom.states[k], nom.controls[k], lx, lu, lxx, luu);

    ws.Qx[k] = lx + fx.transpose() * Vx;
    ws.Qu[k] = lu + fu.transpose() * Vx;
    const Matrix VxxFx = Vxx * fx;
    const Matrix VxxFu = Vxx * fu;
    Matrix Qxx = fx.transpose() * VxxFx;
    Qxx.diagonal() += lxx;
    Matrix Qxu = fx.transpose() * VxxFu;
    Matrix Quu = fu.transpose() * VxxFu;
    Quu.diagonal() += luu;
    if (opts.full_second_order) {
      model.second_order(nom.states[k], nom.controls[k], theta, Vx, hxx, hxu, huu);
      Qxx += hxx;
      Qxu += hxu;
      Quu += huu;
    }
    Quu = 0.5 * (Quu + Quu.transpose()).eval();
    Qxx = 0.5 * (Qxx + Qxx.transpose()).eval();
    if (reg > 0.0) Quu.diagonal().array() += reg;

    Eigen::LLT<Matrix> llt(Quu);
    if (llt.info() != Eigen::Success) {
      bad_step = k;
      return false;
    }
    ws.Qxx[k] = Qxx;
    ws.Qxu[k] = Qxu;
    ws.Quu[k] = Quu;
    ws.Quu_inv[k] = llt.solve(Matrix::Identity(m, m));
    ws.K[k] = -ws.Quu_inv[k] * Qxu.transpose();
    ws.k[k] = -ws.Quu_inv[k] * ws.Qu[k];

    // V_x = Q_x - Q_xu Q_uu^-1 Q_u,  V_xx = Q_xx - Q_xu Q_uu^-1 Q_ux.
    ws.Vx[k] = ws.Qx[k] + Qxu * ws.k[k];
    Matrix V = Qxx + Qxu * ws.K[k];
    ws.Vxx[k] = 0.5 * (V + V.transpose());
    (void)n;
  }
  return true;
}

}  // namespace

DdpWorkspace backward_pass(const AgentModel& model, const AugmentedCost& cost,
                           const Trajectory& nominal, const Vector& theta, double reg,
                           const DdpOptions& opts) {
  const int N = nominal.horizon();
  DdpWorkspace ws;
  ws.Qx.resize(N);
  ws.Qu.resize(N);
  ws.Qxx.resize(N);
  ws.Qxu.resize(N);
  ws.Quu.resize(N);
  ws.Quu_inv.resize(N);
  ws.K.resize(N);
  ws.k.resize(N);
  ws.Vx.resize(N + 1);
  ws.Vxx.resize(N + 1);
  ws.fx.resize(N);
  ws.fu.resize(N);
  for (int k = 0; k < N; ++k)
    model.jacobians(nominal.states[k], nominal.controls[k], theta, ws.fx[k], ws.fu[k]);

  double r = reg;
  int bad = -1;
  while (!sweep(model, cost, nominal, theta, r, opts, ws, bad)) {
    r = r > 0.0 ? r * opts.reg_increase : opts.reg_init;
    if (r > opts.reg_max) {
      throw SolverError("DDP backward pass: Q_uu not positive definite at step " + std::to_string(bad) +
                        " even with regularization " + std::to_string(opts.reg_max));
    }
  }
  ws.reg = r;
  return ws;
}

ForwardPassResult forward_pass(const AgentModel& model, const AugmentedCost& cost,
                               const Trajectory& nominal, double nominal_cost,
                               const DdpWorkspace& ws, const Vector& theta, const DdpOptions& opts) {
  const int N = nominal.horizon();
  ForwardPassResult best;
  best.trajectory = nominal;
  best.cost = nominal_cost;
  if (ws.max_feedforward() == 0.0) return best;

  double alpha = 1.0;
  for (int ls = 0; ls < opts.line_search_steps; ++ls, alpha *= 0.5) {
    Trajectory cand;
    cand.states.resize(N + 1);
    cand.controls.resize(N);
    cand.states[0] = nominal.states[0];
    bool finite = true;
    for (int k = 0; k < N; ++k) {
      cand.controls[k] = nominal.controls[k] + alpha * ws.k[k] + ws.K[k] * (cand.states[k] - nominal.states[k]);
      cand.states[k + 1] = model.step(cand.states[k], cand.controls[k], theta);
      if (!cand.states[k + 1].allFinite()) {
        finite = false;
        break;
      }
    }
    if (!finite) continue;
    const double c = cost.total(cand);
    if (std::isfinite(c) && c < nominal_cost) {
      best.trajectory = std::move(cand);
      best.cost = c;
      best.alpha = alpha;
      best.stalled = false;
      return best;
    }
  }
  return best;
}

DdpResult ddp_solve(const AgentModel& model, const AugmentedCost& cost, const Trajectory& init,
                    const Vector& theta, const DdpOptions& opts) {
  init.validate();
  if (init.horizon() != cost.horizon()) throw ConfigError("DDP: initial trajectory horizon differs from cost");
  cost.base.validate(model.state_dim(), model.control_dim());

  DdpResult res;
  res.trajectory = rollout(model, init.states.front(), init.controls, theta);
  double c = cost.total(res.trajectory);
  res.report.cost_history.push_back(c);
  // Levenberg term only once needed; reg_init is the first nonzero level.
  double reg = 0.0;

  for (int it = 0; it < opts.max_iters; ++it) {
    DdpWorkspace ws = backward_pass(model, cost, res.trajectory, theta, reg, opts);
    reg = ws.reg;
    if (ws.max_feedforward() <= opts.tol) {
      res.report.converged = true;
      break;
    }
    ForwardPassResult fp = forward_pass(model, cost, res.trajectory, c, ws, theta, opts);
    if (fp.stalled) {
      reg = std::max(reg * opts.reg_increase, opts.reg_init);
      if (reg > opts.reg_max) break;
      continue;
    }
    res.trajectory = std::move(fp.trajectory);
    c = fp.cost;
    res.report.cost_history.push_back(c);
    ++res.report.iterations;
    reg /= opts.reg_decrease;
    if (reg < opts.reg_init) reg = 0.0;
  }

  // Unregularized where possible so cached gains match the optimum exactly.
  res.workspace = backward_pass(model, cost, res.trajectory, theta, 0.0, opts);
  res.report.cost = c;
  res.report.max_feedforward = res.workspace.max_feedforward();
  res.report.final_reg = res.workspace.reg;
  if (!res.report.converged && res.report.max_feedforward <= opts.tol) res.report.converged = true;
  return res;
}

}  // namespace l2c
