#pragma once

#include "l2c/agent_model.hpp"
#include "l2c/cost.hpp"

#include <vector>

namespace l2c {

struct DdpOptions {
  double tol = 1e-6;         // stop when max_k |k_k| <= tol
  int max_iters = 100;
  bool full_second_order = false;  // add V_x . f_xx terms (off = iLQR)
  double reg_init = 1e-6;
  double reg_increase = 10.0;
  double reg_decrease = 2.0;
  double reg_max = 1e6;
  int line_search_steps = 11;  // alpha in {1, 1/2, ..., 2^-10}
};

/// Base cost plus the ADMM proximal terms of Subproblem 1.
struct AugmentedCost {
  QuadraticCost base;
  VectorSeq x_copy;  // N+1
  VectorSeq u_copy;  // N
  VectorSeq lambda;  // N+1
  VectorSeq xi;      // N
  double rho = 0.0;

  static AugmentedCost plain(const QuadraticCost& base);

  int horizon() const { return base.horizon(); }
  bool has_penalty() const { return rho > 0.0; }
  double stage(int k, const Vector& x, const Vector& u) const;
  double terminal(const Vector& x) const;
  double total(const Trajectory& t) const;
  // Diagonal Hessians are returned as vectors.
  void stage_derivatives(int k, const Vector& x, const Vector& u, Vector& lx, Vector& lu,
                         Vector& lxx, Vector& luu) const;
  void terminal_derivatives(const Vector& x, Vector& lx, Vector& lxx) const;
};

struct DdpWorkspace {
  VectorSeq Qx, Qu;
  MatrixSeq Qxx, Qxu, Quu, Quu_inv;
  MatrixSeq K;
  VectorSeq k;
  VectorSeq Vx;   // N+1
  MatrixSeq Vxx;  // N+1
  MatrixSeq fx, fu;  // step Jacobians along the nominal
  double reg = 0.0;  // regularization actually applied to Quu
  int horizon() const { return static_cast<int>(K.size()); }
  double max_feedforward() const;
};

struct DdpReport {
  bool converged = false;
  int iterations = 0;  // accepted forward passes
  double cost = 0.0;
  double max_feedforward = 0.0;
  double final_reg = 0.0;
  std::vector<double> cost_history;
};

struct DdpResult {
  Trajectory trajectory;
  DdpWorkspace workspace;
  DdpReport report;
};

struct ForwardPassResult {
  Trajectory trajectory;
  double cost = 0.0;
  double alpha = 0.0;
  bool stalled = true;
};

Trajectory rollout(const AgentModel& model, const Vector& x0, const VectorSeq& controls,
                   const Vector& theta);

/// Throws SolverError if Quu cannot be made PD below opts.reg_max.
DdpWorkspace backward_pass(const AgentModel& model, const AugmentedCost& cost,
                           const Trajectory& nominal, const Vector& theta, double reg,
                           const DdpOptions& opts = {});

ForwardPassResult forward_pass(const AgentModel& model, const AugmentedCost& cost,
                               const Trajectory& nominal, double nominal_cost,
                               const DdpWorkspace& ws, const Vector& theta,
                               const DdpOptions& opts = {});

/// The returned workspace is re-evaluated at the returned trajectory.
DdpResult ddp_solve(const AgentModel& model, const AugmentedCost& cost, const Trajectory& init,
                    const Vector& theta, const DdpOptions& opts = {});

}  // namespace l2c
