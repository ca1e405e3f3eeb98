#include "l2c/shapes.hpp"
#include "l2c/multilift_problems.hpp"

namespace l2c {

std::vector<AuxInstance> last_iteration_aux(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                                            const GradResult& grads) {
  const int A = static_cast<int>(forward.iterates.size());
  if (A == 0) throw ConfigError("no forward iterates");
  if (static_cast<int>(grads.history.size()) != A) throw ConfigError("gradient history does not match the forward run");
  AdmmState prev = forward.initial;
  if (A > 1) {
    const AdmmIterate& p = forward.iterates[A - 2];
    prev.iteration = p.index;
    prev.aux = p.aux;
    prev.agents.clear();
    for (const auto& a : p.agents) prev.agents.push_back({a.primal, a.copy, a.lambda, a.xi});
  }
  const GradIterate g0 = A > 1 ? grads.history[A - 2] : zero_grad_iterate(problem, hp.theta.size());
  const AdmmIterate& F = forward.iterates.back();
  std::vector<AuxInstance> out;
  for (int i = 0; i < problem.num_agents(); ++i) {
    AuxInstance inst;
    inst.name = problem.agents[i].name;
    inst.aux = subsystem1_data(problem, hp, prev, F.agents[i], i, &g0.agents[i]);
    inst.workspace = F.agents[i].workspace;
    out.push_back(std::move(inst));
  }
  return out;
}

SolverAgreement compare_aux_solvers(const AuxInstance& inst) {
  const AuxLqrSolution a = aux_lqr_reuse(inst.aux, inst.workspace);
  const AuxLqrSolution b = aux_lqr_pmp_oracle(inst.aux);
  const AuxLqrSolution c = aux_lqr_augmented_oracle(inst.aux);
  return {mean_step_relative_error(a.X, b.X), mean_step_relative_error(a.X, c.X), mean_step_relative_error(b.X, c.X)};
}

std::vector<AuxInstance> standard_shape_instances(int horizon, int a_max) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.horizon = horizon;
  cfg.r_g = Vec3(0.02, 0.01, 0.0);
  return standard_shape_instances(cfg, Vec3(0, 0, 1), Vec3(1, 0, 1), a_max);
}

std::vector<AuxInstance> standard_shape_instances(const MultiliftConfig& cfg, const Vec3& start, const Vec3& goal,
                                               int a_max) {
  const LoadReference ref = make_load_reference(cfg, start, goal);

  std::vector<AuxInstance> out;
  const Problem rp = cable_reference_problem(cfg, ref);
  const HyperParams hls = default_reference_theta();
  const AdmmResult rf = admm_run(rp, hls, a_max);
  auto r_aux = last_iteration_aux(rp, hls, rf, gradsolver_run(rp, hls, rf));
  r_aux[0].name = "13x36";
  out.push_back(std::move(r_aux[0]));

  const Problem fp = multilift_problem(cfg, ref, export_cable_references(cfg, rf));
  const HyperParams hf = default_full_theta();
  const AdmmResult ff = admm_run(fp, hf, a_max);
  auto f_aux = last_iteration_aux(fp, hf, ff, gradsolver_run(fp, hf, ff));
  f_aux[0].name = "13x54";
  f_aux[1].name = "8x54";
  out.push_back(std::move(f_aux[0]));
  out.push_back(std::move(f_aux[1]));
  return out;
}

}  // namespace l2c
