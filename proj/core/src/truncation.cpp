#include "l2c/gradsolver.hpp"

#include <algorithm>
#include <cmath>

namespace l2c {

TruncationReport truncation_error_check(const Problem& problem, const HyperParams& hp,
                                        const std::vector<int>& a_tc_levels, int a_fp,
                                        const AdmmOptions& opts, const GradOptions& gopts) {
  const int N = problem.horizon;
  const int na = problem.num_agents();
  GradOptions go = gopts;
  go.keep_history = false;

  const AdmmResult ref = admm_run(problem, hp, a_fp, opts);
  const GradResult gref = gradsolver_run(problem, hp, ref, go);

  TruncationReport rep;
  rep.a_fp = a_fp;
  for (int a_tc : a_tc_levels) {
    if (a_tc < 1 || a_tc > a_fp) throw ConfigError("truncation level outside [1, a_fp]");
    const AdmmResult fwd = admm_run(problem, hp, a_tc, opts);
    const GradResult g = gradsolver_run(problem, hp, fwd, go);
    const auto& P = fwd.iterates.back().agents;
    const auto& Q = ref.iterates.back().agents;

    TruncationLevel lv;
    lv.a_tc = a_tc;
    std::vector<double> dtau(N + 1, 0.0);
    double total = 0.0;
    for (int k = 0; k <= N; ++k) {
      double dx = 0.0, dt = 0.0;
      for (int i = 0; i < na; ++i) {
        dx += (g.final.agents[i].X[k] - gref.final.agents[i].X[k]).squaredNorm();
        dt += (P[i].primal.states[k] - Q[i].primal.states[k]).squaredNorm();
        if (k < N) dt += (P[i].primal.controls[k] - Q[i].primal.controls[k]).squaredNorm();
      }
      lv.dX.push_back(std::sqrt(dx));
      dtau[k] = std::sqrt(dt);
      total += dx;
    }
    lv.deviation = std::sqrt(total);
    double cum = 0.0;
    for (int k = 0; k <= N; ++k) {
      lv.cum_dev.push_back(cum);
      const double r = cum > 0.0 ? lv.dX[k] / cum : 0.0;
      lv.ratio.push_back(r);
      lv.max_ratio = std::max(lv.max_ratio, r);
      cum += dtau[k];
    }
    rep.levels.push_back(std::move(lv));
  }

  std::vector<double> maxes;
  for (const auto& l : rep.levels) maxes.push_back(l.max_ratio);
  if (!maxes.empty()) {
    std::vector<double> sorted = maxes;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    rep.median_max_ratio = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    rep.max_max_ratio = sorted.back();
    rep.bounded = std::isfinite(rep.max_max_ratio) && rep.max_max_ratio <= 10.0 * rep.median_max_ratio;
  }
  rep.monotone = true;
  for (std::size_t l = 1; l < rep.levels.size(); ++l)
    if (rep.levels[l].deviation > rep.levels[l - 1].deviation) rep.monotone = false;
  return rep;
}

}  // namespace l2c
