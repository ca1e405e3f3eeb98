#pragma once

#include "l2c/agent_model.hpp"
#include "l2c/cost.hpp"
#include "l2c/ddp.hpp"
#include "l2c/hyper_params.hpp"
#include "l2c/stage.hpp"

#include <string>
#include <vector>

namespace l2c {

struct AgentSpec {
  std::string name;
  AgentModelPtr model;
  QuadraticCost cost;  // weights here are defaults, overridden by the binding
  CostBinding binding;
  double rho = 1.0;    // used when binding.rho < 0
  Vector x0;
  Trajectory initial_guess;  // optional; empty means roll out cost.u_ref from x0
};

/// Multi-agent problem: agents coupled only through the stage-wise static problems.
struct Problem {
  std::vector<AgentSpec> agents;
  std::vector<StageDef> stages;  // empty (no coupling) or N+1 entries
  ThetaLayout layout;
  int horizon = 0;

  int num_agents() const { return static_cast<int>(agents.size()); }
  StageLayout stage_layout(int k) const;
  const StageDef& stage(int k) const;
  QuadraticCost cost_for(int i, const Vector& theta) const;
  double rho_for(int i, const Vector& theta) const;
  Trajectory initial_guess(int i, const Vector& theta) const;
  void validate() const;
};

struct AdmmOptions {
  int max_iters = 20;
  double residual_tol = 0.0;  // > 0 stops early once the aggregate residual falls below it
  DdpOptions ddp;
  BarrierOptions barrier;
  int threads = 1;
};

struct AgentState {
  Trajectory primal;  // DDP warm start
  Trajectory copy;
  VectorSeq lambda;   // N+1
  VectorSeq xi;       // N
};

/// Everything needed to continue an ADMM run.
struct AdmmState {
  std::vector<AgentState> agents;
  VectorSeq aux;  // per stage
  int iteration = 0;
};

struct AgentIterate {
  Trajectory primal;
  Trajectory copy;
  VectorSeq lambda;
  VectorSeq xi;
  double rho = 0.0;
  DdpWorkspace workspace;
  DdpReport ddp;
};

struct AdmmIterate {
  int index = 0;  // 1-based iteration number
  std::vector<AgentIterate> agents;
  VectorSeq aux;
  std::vector<double> stage_mu;
};

struct ResidualReport {
  std::vector<std::vector<double>> rx;  // [iteration][agent]
  std::vector<std::vector<double>> ru;
  std::vector<double> aggregate;        // [iteration]
};

struct AdmmResult {
  AdmmState initial;
  std::vector<AdmmIterate> iterates;
  ResidualReport residuals;
  AdmmState final_state() const;
};

/// Copies = initial primal guess, duals = 0.
AdmmState admm_initial_state(const Problem& problem, const HyperParams& hp);

/// Subproblem 1: per-agent DDP on the augmented cost. Fills primal, workspace, report.
void admm_subproblem1(const Problem& problem, const HyperParams& hp, const AdmmState& state,
                      std::vector<AgentIterate>& out, const AdmmOptions& opts);

/// Subproblem 2 at step k: writes copies of all agents at k and the stage aux variables.
double admm_subproblem2_stage(const Problem& problem, const HyperParams& hp, const AdmmState& state, int k,
                              std::vector<AgentIterate>& io, VectorSeq& aux, const AdmmOptions& opts);

/// Subproblem 3: dual ascent from the previous duals.
void admm_subproblem3(const AdmmState& state, std::vector<AgentIterate>& io);

AdmmResult admm_run(const Problem& problem, const HyperParams& hp, int a_max, const AdmmState& init,
                    const AdmmOptions& opts = {});
AdmmResult admm_run(const Problem& problem, const HyperParams& hp, int a_max, const AdmmOptions& opts = {});

/// Stage vector from per-agent blocks: [x_i + lambda_i / rho_i; u_i + xi_i / rho_i; ...].
void stage_proximal_data(const Problem& problem, const std::vector<AgentIterate>& it, const AdmmState& prev,
                         int k, Vector& target, Vector& weight);
Vector stage_vector(const Problem& problem, const std::vector<Trajectory>& copies, const Vector& aux, int k);

}  // namespace l2c
