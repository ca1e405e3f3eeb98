#include "commands.hpp"

#include <l2c/csv.hpp>
#include <l2c/log.hpp>
#include <l2c/scenario.hpp>
#include <l2c/shapes.hpp>
#include <l2c/training.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace l2c::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_manifest(const fs::path& out, const std::string& command, std::uint64_t seed, const json& config) {
  const std::string canonical = config.dump();
  write_json(out / "manifest.json", {{"command", command},
                                     {"version", L2C_VERSION},
                                     {"seed", seed},
                                     {"config_hash", fnv1a_hex(canonical)},
                                     {"config", config}});
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json theta_json(const HyperParams& hp) {
  json segs = json::array();
  for (const auto& s : hp.layout.segments()) segs.push_back({{"name", s.name}, {"offset", s.offset}, {"size", s.size}});
  return {{"layout", segs}, {"theta", vec_json(hp.theta)}};
}

/// Hyperparameters for a scenario from defaults, an explicit theta file or a checkpoint.
struct ThetaChoice {
  HyperParams theta;
  std::optional<HyperParams> theta_ls;  // drives the cable-reference solve of the full kind
  std::string source = "defaults";
};

HyperParams explicit_theta(const json& j, const char* key, const ThetaLayout& layout, const std::string& path) {
  const Vector t = json_vec(j.at(key));
  if (t.size() != layout.size())
    throw ConfigError(path + ": '" + key + "' has " + std::to_string(t.size()) + " entries, expected " +
                      std::to_string(layout.size()));
  return hyper_params_from_theta(t, layout);
}

ThetaChoice choose_theta(const Scenario& s, const std::string& path, const ThetaLayout& layout) {
  ThetaChoice c;
  if (path.empty()) return c;
  const json j = read_json(path);
  try {
    if (j.contains("networks")) {
      if (s.kind == ScenarioKind::ConsensusToy) throw ConfigError("a training checkpoint cannot drive the consensus toy");
      const TrainingResult ck = load_checkpoint(path);
      const TaskSpec task = make_task(s.multilift.r_g, ck.rg_max);
      if (s.kind == ScenarioKind::MultiliftReference) {
        c.theta = ck.model.reference_theta(task);
      } else {
        c.theta_ls = ck.model.reference_theta(task);
        c.theta = ck.model.full_theta(task);
      }
      c.source = "checkpoint";
      return c;
    }
    if (s.kind == ScenarioKind::MultiliftFull && j.contains("theta_ls"))
      c.theta_ls = explicit_theta(j, "theta_ls", reference_theta_layout(), path);
    if (j.contains("theta")) {
      c.theta = explicit_theta(j, "theta", layout, path);
    } else if (!c.theta_ls) {
      throw ConfigError(path + ": expected 'theta', 'theta_ls' or a training checkpoint");
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.source = "file";
  return c;
}

struct Resolved {
  Scenario scenario;
  ScenarioProblem sp;
  HyperParams hp;
  std::string theta_source;
};

Resolved resolve(const CommonOptions& o) {
  Resolved r;
  r.scenario = load_scenario(o.scenario);
  if (o.seed) r.scenario.seed = *o.seed;
  // The layout only depends on the kind, so probe it without the reference solve.
  ThetaLayout layout;
  switch (r.scenario.kind) {
    case ScenarioKind::ConsensusToy: layout = consensus_toy_theta(make_consensus_toy(r.scenario.toy)).layout; break;
    case ScenarioKind::MultiliftReference: layout = reference_theta_layout(); break;
    case ScenarioKind::MultiliftFull: layout = full_theta_layout(); break;
  }
  const ThetaChoice c = choose_theta(r.scenario, o.theta, layout);
  r.sp = build_scenario(r.scenario, c.theta_ls ? &*c.theta_ls : nullptr);
  r.hp = c.theta.theta.size() ? c.theta : r.sp.theta;
  r.theta_source = c.source;
  return r;
}

json base_config(const CommonOptions& o, const Scenario& s, const std::string& theta_source) {
  return {{"scenario", json::parse(scenario_to_json(s))},
          {"theta_source", theta_source},
          {"threads_independent", true}};
  (void)o;
}

CsvTable trajectory_table(const Trajectory& t) {
  CsvTable tab;
  const int n = t.state_dim(), m = t.control_dim();
  tab.header.push_back("step");
  for (int i = 0; i < n; ++i) tab.header.push_back("x" + std::to_string(i));
  for (int i = 0; i < m; ++i) tab.header.push_back("u" + std::to_string(i));
  for (int k = 0; k <= t.horizon(); ++k) {
    std::vector<double> row{double(k)};
    for (int i = 0; i < n; ++i) row.push_back(t.states[k](i));
    for (int i = 0; i < m; ++i) row.push_back(k < t.horizon() ? t.controls[k](i) : NAN);
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

CsvTable dual_table(const AgentIterate& a) {
  CsvTable tab;
  const int n = static_cast<int>(a.lambda.front().size()), m = static_cast<int>(a.xi.front().size());
  const int N = static_cast<int>(a.xi.size());
  tab.header.push_back("step");
  for (int i = 0; i < n; ++i) tab.header.push_back("lambda" + std::to_string(i));
  for (int i = 0; i < m; ++i) tab.header.push_back("xi" + std::to_string(i));
  for (int k = 0; k <= N; ++k) {
    std::vector<double> row{double(k)};
    for (int i = 0; i < n; ++i) row.push_back(a.lambda[k](i));
    for (int i = 0; i < m; ++i) row.push_back(k < N ? a.xi[k](i) : NAN);
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

json stats_json(const std::vector<double>& v) {
  if (v.empty()) return json::object();
  return {{"median", quantile(v, 0.5)}, {"max", *std::max_element(v.begin(), v.end())}};
}

}  // namespace

int run_optimize(const CommonOptions& o) {
  const Resolved r = resolve(o);
  const fs::path out = prepare_out(o.out);
  const int a_max = o.iters.value_or(r.scenario.a_max);
  AdmmOptions opts;
  opts.threads = o.threads;
  const AdmmResult res = admm_run(r.sp.problem, r.hp, a_max, opts);

  const AdmmIterate& last = res.iterates.back();
  for (int i = 0; i < r.sp.problem.num_agents(); ++i) {
    const std::string name = r.sp.problem.agents[i].name;
    write_csv((out / (name + "_primal.csv")).string(), trajectory_table(last.agents[i].primal));
    write_csv((out / (name + "_copy.csv")).string(), trajectory_table(last.agents[i].copy));
    write_csv((out / (name + "_duals.csv")).string(), dual_table(last.agents[i]));
  }
  CsvTable resid;
  resid.header = {"iteration", "agent", "primal_residual_x", "primal_residual_u", "aggregate"};
  for (std::size_t t = 0; t < res.residuals.rx.size(); ++t)
    for (std::size_t i = 0; i < res.residuals.rx[t].size(); ++i)
      resid.rows.push_back({double(t + 1), double(i), res.residuals.rx[t][i], res.residuals.ru[t][i],
                            res.residuals.aggregate[t]});
  write_csv((out / "residuals.csv").string(), resid);
  write_json(out / "theta.json", theta_json(r.hp));

  json cfg = base_config(o, r.scenario, r.theta_source);
  cfg["a_max"] = a_max;
  write_manifest(out, "optimize", r.scenario.seed, cfg);
  log::info("optimize: " + std::to_string(a_max) + " iterations, final aggregate residual " +
            format_double(res.residuals.aggregate.back()));
  return 0;
}

int run_gradcheck(const CommonOptions& o, const GradcheckOptions& g) {
  const Resolved r = resolve(o);
  const fs::path out = prepare_out(o.out);
  const int a_max = o.iters.value_or(r.scenario.a_max);
  AdmmOptions opts;
  opts.threads = o.threads;
  GradOptions gopts;
  gopts.threads = o.threads;
  const Problem& pb = r.sp.problem;

  const AdmmResult fwd = admm_run(pb, r.hp, a_max, opts);
  const GradResult grads = gradsolver_run(pb, r.hp, fwd, gopts);
  const std::vector<AuxInstance> inst = last_iteration_aux(pb, r.hp, fwd, grads);

  const bool do_fd = r.hp.theta.size() <= g.max_fd_params;
  GradIterate fd;
  if (do_fd) {
    fd = pipeline_finite_difference(pb, r.hp, a_max, opts, g.h);
  } else {
    log::warn("gradcheck: " + std::to_string(r.hp.theta.size()) + " hyperparameters exceed --max-fd-params; "
              "finite differences skipped");
  }

  json agents = json::array();
  std::vector<double> e_pmp, e_aug, e_pa, e_fd;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const SolverAgreement s = compare_aux_solvers(inst[i]);
    json a = {{"agent", inst[i].name},
              {"shape", std::to_string(inst[i].aux.Hxx.front().rows()) + "x" + std::to_string(inst[i].aux.cols())},
              {"reuse_vs_pmp", s.reuse_vs_pmp},
              {"reuse_vs_augmented", s.reuse_vs_augmented},
              {"pmp_vs_augmented", s.pmp_vs_augmented}};
    e_pmp.push_back(s.reuse_vs_pmp);
    e_aug.push_back(s.reuse_vs_augmented);
    e_pa.push_back(s.pmp_vs_augmented);
    if (do_fd) {
      const double m = mean_step_relative_error(fd.agents[i].X, grads.final.agents[i].X);
      a["pipeline_vs_fd"] = m;
      a["pipeline_vs_fd_relative_frobenius"] = relative_frobenius(fd.agents[i].X, grads.final.agents[i].X);
      e_fd.push_back(m);
    }
    agents.push_back(a);
  }
  json report = {{"metric", "(1/N) sum_k |X_k^A - X_k^B|_F / |X_k^A|_F"},
                 {"a_max", a_max},
                 {"fd_step", g.h},
                 {"finite_differences", do_fd},
                 {"agents", agents},
                 {"summary",
                  {{"reuse_vs_pmp", stats_json(e_pmp)},
                   {"reuse_vs_augmented", stats_json(e_aug)},
                   {"pmp_vs_augmented", stats_json(e_pa)},
                   {"pipeline_vs_fd", stats_json(e_fd)}}}};
  if (r.scenario.kind == ScenarioKind::ConsensusToy) {
    const CentralizedQpResult c = centralized_qp_oracle(pb, r.hp, fwd, gopts);
    MatrixSeq A, B;
    for (std::size_t i = 0; i < c.grads.agents.size(); ++i) {
      A.insert(A.end(), c.grads.agents[i].X.begin(), c.grads.agents[i].X.end());
      B.insert(B.end(), grads.final.agents[i].X.begin(), grads.final.agents[i].X.end());
    }
    // The centralized QP differentiates the fixed point, so agreement needs a converged forward run.
    report["centralized_qp_relative_frobenius"] = relative_frobenius(A, B);
    report["centralized_qp_min_eig"] = centralized_qp_min_eig(pb, r.hp, fwd);
  }
  write_json(out / "report.json", report);
  json cfg = base_config(o, r.scenario, r.theta_source);
  cfg["a_max"] = a_max;
  cfg["fd_step"] = g.h;
  write_manifest(out, "gradcheck", r.scenario.seed, cfg);
  return 0;
}

int run_bench(const CommonOptions& o, const BenchOptions& b) {
  if (b.repeats < 20) throw ConfigError("bench needs --repeats >= 20");
  const fs::path out = prepare_out(o.out);
  Scenario s;
  if (!o.scenario.empty()) {
    s = load_scenario(o.scenario);
    if (s.kind == ScenarioKind::ConsensusToy) throw ConfigError("bench needs a multilift scenario");
  } else {
    s.multilift.r_g = Vec3(0.02, 0.01, 0.0);
  }
  if (o.seed) s.seed = *o.seed;
  s.multilift.horizon = b.horizon;
  const std::vector<AuxInstance> shapes = standard_shape_instances(s.multilift, s.start, s.goal, o.iters.value_or(b.a_max));

  using clock = std::chrono::steady_clock;
  auto timed = [](auto&& f) {
    const auto t0 = clock::now();
    f();
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  CsvTable tab;
  tab.header = {"rows", "cols", "reuse_median_ms", "reuse_iqr_ms", "pmp_median_ms", "pmp_iqr_ms",
                "augmented_median_ms", "augmented_iqr_ms", "improvement_vs_pmp", "improvement_vs_augmented"};
  json shapes_json = json::array();
  for (const auto& inst : shapes) {
    // Warm-up run of each solver, discarded.
    aux_lqr_reuse(inst.aux, inst.workspace);
    aux_lqr_pmp_oracle(inst.aux);
    aux_lqr_augmented_oracle(inst.aux);
    std::vector<double> tr, tp, ta;
    for (int i = 0; i < b.repeats; ++i) {
      tr.push_back(timed([&] { aux_lqr_reuse(inst.aux, inst.workspace); }));
      tp.push_back(timed([&] { aux_lqr_pmp_oracle(inst.aux); }));
      ta.push_back(timed([&] { aux_lqr_augmented_oracle(inst.aux); }));
    }
    const double mr = quantile(tr, 0.5), mp = quantile(tp, 0.5), ma = quantile(ta, 0.5);
    const int rows = static_cast<int>(inst.aux.Hxx.front().rows()), cols = inst.aux.cols();
    tab.rows.push_back({double(rows), double(cols), mr, quantile(tr, 0.75) - quantile(tr, 0.25), mp,
                        quantile(tp, 0.75) - quantile(tp, 0.25), ma, quantile(ta, 0.75) - quantile(ta, 0.25),
                        1.0 - mr / mp, 1.0 - mr / ma});
    shapes_json.push_back({{"shape", inst.name},
                           {"median_ms", {{"reuse", mr}, {"pmp", mp}, {"augmented", ma}}},
                           {"improvement_vs_pmp", 1.0 - mr / mp},
                           {"improvement_vs_augmented", 1.0 - mr / ma}});
  }
  write_csv((out / "bench.csv").string(), tab);
  write_json(out / "bench.json", {{"horizon", b.horizon}, {"repeats", b.repeats}, {"shapes", shapes_json}});
  json cfg = {{"scenario", json::parse(scenario_to_json(s))}, {"horizon", b.horizon}, {"repeats", b.repeats}};
  write_manifest(out, "bench", s.seed, cfg);
  return 0;
}

int run_train(const CommonOptions& o, const TrainOptions& t) {
  const fs::path out = prepare_out(o.out);
  TrainingConfig cfg;
  if (!o.scenario.empty()) {
    const Scenario s = load_scenario(o.scenario);
    if (s.kind == ScenarioKind::ConsensusToy) throw ConfigError("train needs a multilift scenario");
    cfg.base = s.multilift;
    cfg.start = s.start;
    cfg.goal = s.goal;
    cfg.seed = s.seed;
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.tasks = t.tasks;
  cfg.episodes = t.episodes;
  cfg.episodes_reference = t.episodes_reference;
  cfg.a_tc = o.iters.value_or(t.a_tc);
  cfg.reference_iters = t.reference_iters;
  cfg.adam.lr = t.lr;
  cfg.rg_max = t.rg_max;
  cfg.adaptive = !t.fixed;
  cfg.threads = o.threads;

  CsvTable curves[2];
  for (auto& c : curves) {
    c.header = {"episode", "mean_loss", "failed_tasks"};
    for (int i = 0; i < cfg.tasks; ++i) c.header.push_back("task_" + std::to_string(i));
  }
  auto on_episode = [&](const EpisodeLog& e) {
    std::vector<double> row{double(e.episode), e.mean_loss, double(e.failed_tasks)};
    row.insert(row.end(), e.task_losses.begin(), e.task_losses.end());
    curves[e.phase - 1].rows.push_back(std::move(row));
    if (t.checkpoint_every > 0 && e.episode > 0 && e.episode % t.checkpoint_every == 0)
      save_checkpoint((out / ("checkpoint_phase" + std::to_string(e.phase) + "_ep" + std::to_string(e.episode) + ".json"))
                          .string(),
                      *e.state);
  };
  const TrainingResult res = train(cfg, on_episode);
  write_csv((out / "loss_reference.csv").string(), curves[0]);
  write_csv((out / "loss.csv").string(), curves[1]);
  save_checkpoint((out / "checkpoint.json").string(), res);

  json jc = {{"multilift", json::parse(scenario_to_json([&] {
                Scenario s;
                s.multilift = cfg.base;
                s.start = cfg.start;
                s.goal = cfg.goal;
                s.seed = cfg.seed;
                return s;
              }()))},
             {"tasks", cfg.tasks},
             {"episodes", cfg.episodes},
             {"episodes_reference", cfg.episodes_reference},
             {"a_tc", cfg.a_tc},
             {"reference_iters", cfg.reference_iters},
             {"lr", cfg.adam.lr},
             {"rg_max", cfg.rg_max},
             {"adaptive", cfg.adaptive}};
  write_manifest(out, "train", cfg.seed, jc);
  return 0;
}

int run_export(const CommonOptions& o) {
  Scenario s = load_scenario(o.scenario);
  if (s.kind == ScenarioKind::ConsensusToy) throw ConfigError("export needs a multilift scenario");
  if (o.seed) s.seed = *o.seed;
  const fs::path out = prepare_out(o.out);

  HyperParams theta_ls = default_reference_theta();
  std::string source = "defaults";
  if (!o.theta.empty()) {
    Scenario probe = s;
    probe.kind = ScenarioKind::MultiliftReference;
    const json j = read_json(o.theta);
    if (j.contains("theta_ls") && !j.contains("networks")) {
      theta_ls = explicit_theta(j, "theta_ls", reference_theta_layout(), o.theta);
      source = "file";
    } else {
      const ThetaChoice c = choose_theta(probe, o.theta, reference_theta_layout());
      theta_ls = c.theta;
      source = c.source;
    }
  }
  const int iters = o.iters.value_or(s.reference_iters);
  const LoadReference ref = make_load_reference(s.multilift, s.start, s.goal);
  AdmmOptions opts;
  opts.threads = o.threads;
  const AdmmResult res = admm_run(cable_reference_problem(s.multilift, ref), theta_ls, iters, opts);
  const CableReferences cr = export_cable_references(s.multilift, res);

  Trajectory reference;
  reference.states = ref.x;
  reference.controls = ref.u;
  write_csv((out / "load_reference.csv").string(), trajectory_table(reference));
  write_csv((out / "load_optimized.csv").string(), trajectory_table(cr.load));
  const int N = s.multilift.horizon;
  for (int i = 0; i < s.multilift.n; ++i) {
    CsvTable tab;
    tab.header = {"step", "d_x", "d_y", "d_z", "tension", "t_body_x", "t_body_y", "t_body_z"};
    for (int k = 0; k <= N; ++k) {
      const Vector& x = cr.x_ref[i][k];
      std::vector<double> row{double(k), x(0), x(1), x(2), x(6)};
      for (int c = 0; c < 3; ++c) row.push_back(k < N ? cr.tension[k][i](c) : NAN);
      tab.rows.push_back(std::move(row));
    }
    write_csv((out / ("cable" + std::to_string(i) + "_reference.csv")).string(), tab);
  }
  write_json(out / "summary.json", {{"tension_spread", cr.spread}, {"iterations", iters}});
  write_json(out / "theta_ls.json", {{"theta_ls", vec_json(theta_ls.theta)}});
  json cfg = {{"scenario", json::parse(scenario_to_json(s))}, {"theta_source", source}, {"iterations", iters}};
  write_manifest(out, "export", s.seed, cfg);
  return 0;
}

}  // namespace l2c::cli
