#include "l2c/admm.hpp"
#include "l2c/log.hpp"
#include "l2c/parallel.hpp"

#include <cmath>
#include <string>

namespace l2c {

StageLayout Problem::stage_layout(int k) const {
  std::vector<int> nx, nu;
  for (const auto& a : agents) {
    nx.push_back(a.model->state_dim());
    nu.push_back(a.model->control_dim());
  }
  const int aux = stages.empty() ? 0 : stages[k].aux_dim;
  return make_stage_layout(nx, nu, k == horizon, aux);
}

const StageDef& Problem::stage(int k) const {
  static const StageDef kEmpty;
  return stages.empty() ? kEmpty : stages[k];
}

QuadraticCost Problem::cost_for(int i, const Vector& theta) const {
  const AgentSpec& a = agents[i];
  QuadraticCost c = a.cost;
  const int n = a.model->state_dim();
  const int m = a.model->control_dim();
  if (a.binding.q >= 0) c.q = theta.segment(a.binding.q, n);
  if (a.binding.r >= 0) c.r = theta.segment(a.binding.r, m);
  if (a.binding.qN >= 0) c.qN = theta.segment(a.binding.qN, n);
  return c;
}

double Problem::rho_for(int i, const Vector& theta) const {
  const AgentSpec& a = agents[i];
  return a.binding.rho >= 0 ? theta(a.binding.rho) : a.rho;
}

Trajectory Problem::initial_guess(int i, const Vector& theta) const {
  const AgentSpec& a = agents[i];
  if (!a.initial_guess.controls.empty()) return a.initial_guess;
  return rollout(*a.model, a.x0, a.cost.u_ref, theta);
}

void Problem::validate() const {
  if (agents.empty()) throw ConfigError("problem has no agents");
  if (horizon <= 0) throw ConfigError("problem horizon must be positive");
  if (!stages.empty() && static_cast<int>(stages.size()) != horizon + 1)
    throw ConfigError("problem needs N+1 stage definitions");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    if (!a.model) throw ConfigError("agent " + std::to_string(i) + " has no model");
    const int n = a.model->state_dim();
    const int m = a.model->control_dim();
    a.cost.validate(n, m);
    if (a.cost.horizon() != horizon) throw ConfigError("agent " + std::to_string(i) + " cost horizon differs");
    if (a.x0.size() != n) throw ConfigError("agent " + std::to_string(i) + " x0 has wrong size");
    auto check = [&](int off, int len, const char* what) {
      if (off >= 0 && off + len > layout.size())
        throw ConfigError("agent " + std::to_string(i) + " " + what + " binding outside theta layout");
    };
    check(a.binding.q, n, "Q");
    check(a.binding.r, m, "R");
    check(a.binding.qN, n, "Q_N");
    check(a.binding.rho, 1, "rho");
  }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const StageLayout l = stage_layout(static_cast<int>(k));
    for (const auto* set : {&stages[k].constraints, &stages[k].costs}) {
      for (const auto& f : *set)
        for (int idx : f->indices())
          if (idx < 0 || idx >= l.dim)
            throw ConfigError("stage " + std::to_string(k) + " function '" + f->name() + "' indexes outside the stage vector");
    }
  }
}

AdmmState AdmmResult::final_state() const {
  if (iterates.empty()) return initial;
  const AdmmIterate& last = iterates.back();
  AdmmState s;
  s.iteration = last.index;
  s.aux = last.aux;
  for (const auto& a : last.agents) s.agents.push_back({a.primal, a.copy, a.lambda, a.xi});
  return s;
}

AdmmState admm_initial_state(const Problem& problem, const HyperParams& hp) {
  problem.validate();
  AdmmState s;
  const int N = problem.horizon;
  for (int i = 0; i < problem.num_agents(); ++i) {
    AgentState a;
    a.primal = problem.initial_guess(i, hp.theta);
    a.copy = a.primal;
    const int n = problem.agents[i].model->state_dim();
    const int m = problem.agents[i].model->control_dim();
    a.lambda.assign(N + 1, Vector::Zero(n));
    a.xi.assign(N, Vector::Zero(m));
    s.agents.push_back(std::move(a));
  }
  s.aux.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    const StageDef& d = problem.stage(k);
    s.aux[k] = d.aux_init.size() == d.aux_dim ? d.aux_init : Vector::Zero(d.aux_dim);
  }
  return s;
}

void admm_subproblem1(const Problem& problem, const HyperParams& hp, const AdmmState& state,
                      std::vector<AgentIterate>& out, const AdmmOptions& opts) {
  out.resize(problem.num_agents());
  parallel_for(problem.num_agents(), opts.threads, [&](int i) {
    const AgentSpec& spec = problem.agents[i];
    AugmentedCost cost;
    cost.base = problem.cost_for(i, hp.theta);
    cost.rho = problem.rho_for(i, hp.theta);
    cost.x_copy = state.agents[i].copy.states;
    cost.u_copy = state.agents[i].copy.controls;
    cost.lambda = state.agents[i].lambda;
    cost.xi = state.agents[i].xi;
    Trajectory init = state.agents[i].primal;
    init.states.front() = spec.x0;
    try {
      DdpResult r = ddp_solve(*spec.model, cost, init, hp.theta, opts.ddp);
      out[i].primal = std::move(r.trajectory);
      out[i].workspace = std::move(r.workspace);
      out[i].ddp = r.report;
      out[i].rho = cost.rho;
    } catch (const SolverError& e) {
      throw SolverError("subproblem 1, agent " + std::to_string(i) + " (" + spec.name + "): " + e.what());
    }
    if (!out[i].ddp.converged)
      log::debug("agent " + std::to_string(i) + " DDP stopped before tolerance, |k|=" +
                 std::to_string(out[i].ddp.max_feedforward));
  });
}

Vector stage_vector(const Problem& problem, const std::vector<Trajectory>& copies, const Vector& aux, int k) {
  const StageLayout l = problem.stage_layout(k);
  Vector w(l.dim);
  for (int i = 0; i < problem.num_agents(); ++i) {
    const int n = problem.agents[i].model->state_dim();
    const int m = problem.agents[i].model->control_dim();
    w.segment(l.x_offset[i], n) = copies[i].states[k];
    if (l.u_offset[i] >= 0) w.segment(l.u_offset[i], m) = copies[i].controls[k];
  }
  if (l.aux_dim > 0) w.tail(l.aux_dim) = aux;
  return w;
}

void stage_proximal_data(const Problem& problem, const std::vector<AgentIterate>& it, const AdmmState& prev,
                         int k, Vector& target, Vector& weight) {
  const StageLayout l = problem.stage_layout(k);
  target = Vector::Zero(l.dim);
  weight = Vector::Zero(l.dim);
  for (int i = 0; i < problem.num_agents(); ++i) {
    const double rho = it[i].rho;
    const int n = problem.agents[i].model->state_dim();
    const int m = problem.agents[i].model->control_dim();
    target.segment(l.x_offset[i], n) = it[i].primal.states[k] + prev.agents[i].lambda[k] / rho;
    weight.segment(l.x_offset[i], n).setConstant(rho);
    if (l.u_offset[i] >= 0) {
      target.segment(l.u_offset[i], m) = it[i].primal.controls[k] + prev.agents[i].xi[k] / rho;
      weight.segment(l.u_offset[i], m).setConstant(rho);
    }
  }
}

double admm_subproblem2_stage(const Problem& problem, const HyperParams& hp, const AdmmState& state, int k,
                              std::vector<AgentIterate>& io, VectorSeq& aux, const AdmmOptions& opts) {
  const StageLayout l = problem.stage_layout(k);
  const StageDef& def = problem.stage(k);
  Vector target, weight;
  stage_proximal_data(problem, io, state, k, target, weight);

  double mu = 0.0;
  Vector w;
  if (def.constraints.empty() && def.costs.empty() && l.aux_dim == 0) {
    w = target;  // proximal minimum
  } else {
    std::vector<Trajectory> prev_copies;
    for (const auto& a : state.agents) prev_copies.push_back(a.copy);
    Vector w0 = stage_vector(problem, prev_copies, state.aux[k], k);
    if (!def.constraints.empty() && !strictly_feasible(def, w0, hp.theta)) {
      Vector alt = target;
      if (l.aux_dim > 0) alt.tail(l.aux_dim) = state.aux[k];
      if (strictly_feasible(def, alt, hp.theta)) w0 = alt;
    }
    try {
      StageSolveResult r = solve_stage(def, target, weight, hp.theta, w0, opts.barrier);
      if (!r.accurate)
        log::warn("subproblem 2, stage " + std::to_string(k) + ": KKT residual " + std::to_string(r.kkt_residual) +
                  " above tolerance after " + std::to_string(r.newton_iterations) + " Newton steps");
      w = std::move(r.w);
      mu = r.mu;
    } catch (const SolverError& e) {
      throw SolverError("subproblem 2, stage " + std::to_string(k) + ": " + e.what());
    }
  }
  for (int i = 0; i < problem.num_agents(); ++i) {
    const int n = problem.agents[i].model->state_dim();
    const int m = problem.agents[i].model->control_dim();
    io[i].copy.states[k] = w.segment(l.x_offset[i], n);
    if (l.u_offset[i] >= 0) io[i].copy.controls[k] = w.segment(l.u_offset[i], m);
  }
  aux[k] = l.aux_dim > 0 ? Vector(w.tail(l.aux_dim)) : Vector();
  return mu;
}

void admm_subproblem3(const AdmmState& state, std::vector<AgentIterate>& io) {
  for (std::size_t i = 0; i < io.size(); ++i) {
    AgentIterate& a = io[i];
    const AgentState& s = state.agents[i];
    const int N = a.primal.horizon();
    a.lambda.resize(N + 1);
    a.xi.resize(N);
    for (int k = 0; k <= N; ++k) a.lambda[k] = s.lambda[k] + a.rho * (a.primal.states[k] - a.copy.states[k]);
    for (int k = 0; k < N; ++k) a.xi[k] = s.xi[k] + a.rho * (a.primal.controls[k] - a.copy.controls[k]);
  }
}

AdmmResult admm_run(const Problem& problem, const HyperParams& hp, int a_max, const AdmmState& init,
                    const AdmmOptions& opts) {
  if (a_max < 1) throw ConfigError("ADMM needs a_max >= 1");
  problem.validate();
  if (hp.theta.size() != problem.layout.size()) throw ConfigError("theta size does not match problem layout");
  const int N = problem.horizon;
  AdmmResult res;
  res.initial = init;
  AdmmState state = init;

  for (int a = 0; a < a_max; ++a) {
    AdmmIterate it;
    it.index = state.iteration + 1;
    try {
      admm_subproblem1(problem, hp, state, it.agents, opts);
      for (auto& ag : it.agents) ag.copy = Trajectory::zeros(ag.primal.state_dim(), ag.primal.control_dim(), N);
      it.aux.resize(N + 1);
      it.stage_mu.assign(N + 1, 0.0);
      parallel_for(N + 1, opts.threads, [&](int k) {
        it.stage_mu[k] = admm_subproblem2_stage(problem, hp, state, k, it.agents, it.aux, opts);
      });
      admm_subproblem3(state, it.agents);
    } catch (const SolverError& e) {
      throw SolverError("ADMM iteration " + std::to_string(it.index) + ": " + e.what());
    }

    std::vector<double> rx, ru;
    double agg = 0.0;
    for (const auto& ag : it.agents) {
      double sx = 0.0, su = 0.0;
      for (int k = 0; k <= N; ++k) sx += (ag.primal.states[k] - ag.copy.states[k]).squaredNorm();
      for (int k = 0; k < N; ++k) su += (ag.primal.controls[k] - ag.copy.controls[k]).squaredNorm();
      rx.push_back(std::sqrt(sx));
      ru.push_back(std::sqrt(su));
      agg += sx + su;
    }
    res.residuals.rx.push_back(rx);
    res.residuals.ru.push_back(ru);
    res.residuals.aggregate.push_back(std::sqrt(agg));

    state.iteration = it.index;
    state.aux = it.aux;
    for (std::size_t i = 0; i < it.agents.size(); ++i) {
      state.agents[i] = {it.agents[i].primal, it.agents[i].copy, it.agents[i].lambda, it.agents[i].xi};
    }
    res.iterates.push_back(std::move(it));
    if (opts.residual_tol > 0.0 && res.residuals.aggregate.back() < opts.residual_tol) break;
  }
  return res;
}

AdmmResult admm_run(const Problem& problem, const HyperParams& hp, int a_max, const AdmmOptions& opts) {
  return admm_run(problem, hp, a_max, admm_initial_state(problem, hp), opts);
}

}  // namespace l2c
