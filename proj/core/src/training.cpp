#include "l2c/training.hpp"
#include "l2c/log.hpp"
#include "l2c/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>

namespace l2c {

namespace {

constexpr int kCheckpointVersion = 1;

Vector sigmoid(const Vector& z) { return (1.0 + (-z).array().exp()).inverse().matrix(); }

Vector logit(const Vector& y) { return (y.array() / (1.0 - y.array())).log().matrix(); }

struct TaskOutcome {
  bool ok = false;
  double loss = 0.0;
  Vector g_ls, g_l, g_c;
};

MultiliftConfig task_config(const TrainingConfig& cfg, const TaskSpec& task) {
  MultiliftConfig c = cfg.base;
  c.r_g = task.r_g;
  return c;
}

}  // namespace

TaskSpec make_task(const Vec3& r_g, double rg_max) {
  TaskSpec t;
  t.r_g = r_g;
  t.input_ref = Vector::Constant(1, r_g.norm() / rg_max);
  t.input = Vector(2);
  t.input << r_g(0) / rg_max, r_g(1) / rg_max;
  return t;
}

std::vector<TaskSpec> sample_tasks(int count, double rg_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.0, rg_max), angle(0.0, 2.0 * M_PI);
  std::vector<TaskSpec> out;
  for (int i = 0; i < count; ++i) {
    const double r = radius(rng), a = angle(rng);
    out.push_back(make_task(Vec3(r * std::cos(a), r * std::sin(a), 0.0), rg_max));
  }
  return out;
}

std::vector<int> reference_net_dims() { return {1, 16, 32, 36}; }
std::vector<int> load_net_dims() { return {2, 16, 32, 33}; }
std::vector<int> cable_net_dims() { return {2, 10, 20, 21}; }

HyperModel HyperModel::initial(bool adaptive, std::uint64_t seed) {
  HyperModel m;
  m.adaptive = adaptive;
  std::mt19937_64 rng(seed);
  m.net_ls = Mlp::random(reference_net_dims(), rng);
  m.net_l = Mlp::random(load_net_dims(), rng);
  m.net_c = Mlp::random(cable_net_dims(), rng);
  // The ablation starts from the same hyperparameters the untrained networks emit at r_g = 0.
  m.phi_ls = logit(m.net_ls.forward(Vector::Zero(1)));
  m.phi = Vector(54);
  m.phi << logit(m.net_l.forward(Vector::Zero(2))), logit(m.net_c.forward(Vector::Zero(2)));
  return m;
}

HyperParams HyperModel::reference_theta(const TaskSpec& task, Matrix* jac) const {
  Vector raw;
  if (adaptive) {
    raw = net_ls.forward(task.input_ref, jac);
  } else {
    raw = sigmoid(phi_ls);
    if (jac) *jac = (raw.array() * (1.0 - raw.array())).matrix().asDiagonal();
  }
  return map_theta(raw, reference_theta_layout());
}

HyperParams HyperModel::full_theta(const TaskSpec& task, Matrix* jac_l, Matrix* jac_c) const {
  Vector raw(54);
  if (adaptive) {
    raw << net_l.forward(task.input, jac_l), net_c.forward(task.input, jac_c);
  } else {
    raw = sigmoid(phi);
    if (jac_l) *jac_l = (raw.array() * (1.0 - raw.array())).matrix().asDiagonal();
    if (jac_c) *jac_c = Matrix();
  }
  return map_theta(raw, full_theta_layout());
}

double evaluate_reference_loss(const TrainingConfig& cfg, const HyperModel& model,
                               const std::vector<TaskSpec>& tasks) {
  double sum = 0.0;
  int ok = 0;
  for (const auto& task : tasks) {
    try {
      const MultiliftConfig mc = task_config(cfg, task);
      const LoadReference ref = make_load_reference(mc, cfg.start, cfg.goal);
      const Problem pb = cable_reference_problem(mc, ref);
      const AdmmResult fwd = admm_run(pb, model.reference_theta(task), cfg.a_tc);
      sum += upper_loss(fwd.iterates.back(), {load_tracking_target(ref.x, ref.u)}).total;
      ++ok;
    } catch (const Error& e) {
      log::warn(std::string("reference evaluation skipped a task: ") + e.what());
    }
  }
  if (ok == 0) throw TrainingError("every task failed during evaluation");
  return sum / ok;
}

TrainingResult train(const TrainingConfig& cfg, const std::function<void(const EpisodeLog&)>& on_episode) {
  if (cfg.tasks <= 0 || cfg.a_tc <= 0) throw ConfigError("training needs at least one task and one ADMM iteration");
  cfg.base.validate();
  TrainingResult out;
  out.seed = cfg.seed;
  out.rg_max = cfg.rg_max;
  out.model = HyperModel::initial(cfg.adaptive, cfg.seed);
  HyperModel& model = out.model;
  const std::vector<TaskSpec> tasks = sample_tasks(cfg.tasks, cfg.rg_max, cfg.seed + 1);
  const int M = cfg.tasks;

  // Phase 1: cable-reference hyperparameters.
  auto run_reference = [&](bool with_grad) {
    std::vector<TaskOutcome> res(M);
    parallel_for(M, cfg.threads, [&](int t) {
      try {
        const MultiliftConfig mc = task_config(cfg, tasks[t]);
        const LoadReference ref = make_load_reference(mc, cfg.start, cfg.goal);
        const Problem pb = cable_reference_problem(mc, ref);
        Matrix J;
        const HyperParams hp = model.reference_theta(tasks[t], with_grad ? &J : nullptr);
        const AdmmResult fwd = admm_run(pb, hp, cfg.a_tc);
        const UpperLoss L = upper_loss(fwd.iterates.back(), {load_tracking_target(ref.x, ref.u)});
        res[t].loss = L.total;
        if (with_grad) {
          const GradResult g = gradsolver_run(pb, hp, fwd, GradOptions{.keep_history = false});
          res[t].g_ls = assemble_grad(L, g.final, hp.dtheta_draw(), J, 0);
        }
        res[t].ok = std::isfinite(L.total);
      } catch (const Error& e) {
        log::warn("phase 1 task " + std::to_string(t) + " skipped: " + e.what());
      }
    });
    return res;
  };

  auto reduce = [&](const std::vector<TaskOutcome>& res, int phase, int episode, EpisodeLog& log_entry,
                    Vector* g1, Vector* g2, Vector* g3) {
    int ok = 0;
    double mean = 0.0;
    log_entry = EpisodeLog{phase, episode, 0.0, 0, {}, &out};
    for (const auto& r : res) {
      log_entry.task_losses.push_back(r.ok ? r.loss : std::numeric_limits<double>::quiet_NaN());
      if (!r.ok) continue;
      ++ok;
      mean += r.loss;
      if (g1 && r.g_ls.size()) *g1 = g1->size() ? Vector(*g1 + r.g_ls) : r.g_ls;
      if (g2 && r.g_l.size()) *g2 = g2->size() ? Vector(*g2 + r.g_l) : r.g_l;
      if (g3 && r.g_c.size()) *g3 = g3->size() ? Vector(*g3 + r.g_c) : r.g_c;
    }
    if (ok == 0)
      throw TrainingError("phase " + std::to_string(phase) + " episode " + std::to_string(episode) +
                          ": every task failed");
    mean /= ok;
    for (Vector* g : {g1, g2, g3})
      if (g && g->size()) *g /= ok;
    log_entry.mean_loss = mean;
    log_entry.failed_tasks = M - ok;
    log::info("phase " + std::to_string(phase) + " episode " + std::to_string(episode) + " loss " +
              std::to_string(mean));
    return mean;
  };

  for (int ep = 0; ep <= cfg.episodes_reference; ++ep) {
    const bool update = ep < cfg.episodes_reference;
    const auto res = run_reference(update);
    EpisodeLog entry;
    Vector g;
    out.loss_reference.push_back(reduce(res, 1, ep, entry, &g, nullptr, nullptr));
    if (!update) {
      if (on_episode) on_episode(entry);
      break;
    }
    try {
      if (model.adaptive) {
        Vector p = model.net_ls.params();
        adam_step(p, g, out.adam_ls, cfg.adam);
        model.net_ls.set_params(p);
      } else {
        adam_step(model.phi_ls, g, out.adam_ls, cfg.adam);
      }
    } catch (const TrainingError& e) {
      throw TrainingError("phase 1 episode " + std::to_string(ep) + ": " + e.what());
    }
    if (on_episode) on_episode(entry);
  }

  // Phase 2: load and cable hyperparameters with the reference network frozen.
  std::vector<LoadReference> load_refs(M);
  std::vector<CableReferences> cable_refs(M);
  std::vector<char> have_ref(M, 0);
  parallel_for(M, cfg.threads, [&](int t) {
    try {
      const MultiliftConfig mc = task_config(cfg, tasks[t]);
      load_refs[t] = make_load_reference(mc, cfg.start, cfg.goal);
      const Problem pb = cable_reference_problem(mc, load_refs[t]);
      const AdmmResult fwd = admm_run(pb, model.reference_theta(tasks[t]), cfg.reference_iters);
      cable_refs[t] = export_cable_references(mc, fwd);
      have_ref[t] = 1;
    } catch (const Error& e) {
      log::warn("cable references for task " + std::to_string(t) + " failed: " + e.what());
    }
  });

  auto run_full = [&](bool with_grad) {
    std::vector<TaskOutcome> res(M);
    parallel_for(M, cfg.threads, [&](int t) {
      if (!have_ref[t]) return;
      try {
        const MultiliftConfig mc = task_config(cfg, tasks[t]);
        const Problem pb = multilift_problem(mc, load_refs[t], cable_refs[t]);
        Matrix Jl, Jc;
        const HyperParams hp = model.full_theta(tasks[t], with_grad ? &Jl : nullptr, with_grad ? &Jc : nullptr);
        const AdmmResult fwd = admm_run(pb, hp, cfg.a_tc);
        std::vector<TrackingTarget> targets{load_tracking_target(load_refs[t].x, load_refs[t].u)};
        for (int i = 0; i < mc.n; ++i)
          targets.push_back(cable_tracking_target(cable_refs[t].x_ref[i], cable_refs[t].u_ref[i]));
        const UpperLoss L = upper_loss(fwd.iterates.back(), targets);
        res[t].loss = L.total;
        if (with_grad) {
          const GradResult g = gradsolver_run(pb, hp, fwd, GradOptions{.keep_history = false});
          if (model.adaptive) {
            res[t].g_l = assemble_grad(L, g.final, hp.dtheta_draw(), Jl, 0);
            res[t].g_c = assemble_grad(L, g.final, hp.dtheta_draw(), Jc, 33);
          } else {
            res[t].g_l = assemble_grad(L, g.final, hp.dtheta_draw(), Jl, 0);
          }
        }
        res[t].ok = std::isfinite(L.total);
      } catch (const Error& e) {
        log::warn("phase 2 task " + std::to_string(t) + " skipped: " + e.what());
      }
    });
    return res;
  };

  for (int ep = 0; ep <= cfg.episodes; ++ep) {
    const bool update = ep < cfg.episodes;
    const auto res = run_full(update);
    EpisodeLog entry;
    Vector gl, gc;
    out.loss.push_back(reduce(res, 2, ep, entry, nullptr, &gl, &gc));
    if (!update) {
      if (on_episode) on_episode(entry);
      break;
    }
    try {
      if (model.adaptive) {
        Vector pl = model.net_l.params(), pc = model.net_c.params();
        adam_step(pl, gl, out.adam_l, cfg.adam);
        adam_step(pc, gc, out.adam_c, cfg.adam);
        model.net_l.set_params(pl);
        model.net_c.set_params(pc);
      } else {
        adam_step(model.phi, gl, out.adam_l, cfg.adam);
      }
    } catch (const TrainingError& e) {
      throw TrainingError("phase 2 episode " + std::to_string(ep) + ": " + e.what());
    }
    if (on_episode) on_episode(entry);
  }
  return out;
}

namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto s = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

json adam_json(const AdamState& a) { return {{"m", vec_json(a.m)}, {"v", vec_json(a.v)}, {"t", a.t}}; }

AdamState json_adam(const json& j) { return {json_vec(j.at("m")), json_vec(j.at("v")), j.at("t").get<int>()}; }

json net_json(const Mlp& n) { return {{"dims", n.dims()}, {"params", vec_json(n.params())}}; }

Mlp json_net(const json& j) {
  Mlp n(j.at("dims").get<std::vector<int>>());
  n.set_params(json_vec(j.at("params")));
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainingResult& r) {
  json j;
  j["schema_version"] = kCheckpointVersion;
  j["seed"] = r.seed;
  j["rg_max"] = r.rg_max;
  j["adaptive"] = r.model.adaptive;
  j["episode_reference"] = r.loss_reference.empty() ? 0 : static_cast<int>(r.loss_reference.size()) - 1;
  j["episode"] = r.loss.empty() ? 0 : static_cast<int>(r.loss.size()) - 1;
  j["loss_reference"] = r.loss_reference;
  j["loss"] = r.loss;
  j["networks"] = {{"ls", net_json(r.model.net_ls)}, {"l", net_json(r.model.net_l)}, {"c", net_json(r.model.net_c)}};
  j["phi_ls"] = vec_json(r.model.phi_ls);
  j["phi"] = vec_json(r.model.phi);
  j["adam"] = {{"ls", adam_json(r.adam_ls)}, {"l", adam_json(r.adam_l)}, {"c", adam_json(r.adam_c)}};
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write checkpoint " + path);
  f << j.dump(1) << '\n';
}

TrainingResult load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read checkpoint " + path);
  json j;
  try {
    f >> j;
    if (j.at("schema_version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint schema_version in " + path);
    TrainingResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.rg_max = j.at("rg_max").get<double>();
    r.model.adaptive = j.at("adaptive").get<bool>();
    r.loss_reference = j.at("loss_reference").get<std::vector<double>>();
    r.loss = j.at("loss").get<std::vector<double>>();
    r.model.net_ls = json_net(j.at("networks").at("ls"));
    r.model.net_l = json_net(j.at("networks").at("l"));
    r.model.net_c = json_net(j.at("networks").at("c"));
    r.model.phi_ls = json_vec(j.at("phi_ls"));
    r.model.phi = json_vec(j.at("phi"));
    r.adam_ls = json_adam(j.at("adam").at("ls"));
    r.adam_l = json_adam(j.at("adam").at("l"));
    r.adam_c = json_adam(j.at("adam").at("c"));
    return r;
  } catch (const json::exception& e) {
    throw ConfigError("malformed checkpoint " + path + ": " + e.what());
  }
}

}  // namespace l2c
