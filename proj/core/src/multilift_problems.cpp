#include "l2c/multilift_problems.hpp"

#include <string>

namespace l2c {

namespace {

std::vector<int> range(int start, int len) {
  std::vector<int> v(len);
  for (int i = 0; i < len; ++i) v[i] = start + i;
  return v;
}

void add_separation(const MultiliftConfig& cfg, const std::vector<QuadPositionPtr>& pos, StageDef& def) {
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = i + 1; j < cfg.n; ++j)
      def.constraints.push_back(std::make_shared<QuadSeparation>(pos[i], pos[j], cfg.d_min_q,
                                                                 "sep_" + std::to_string(i) + "_" + std::to_string(j)));
    for (std::size_t o = 0; o < cfg.obstacles.size(); ++o)
      def.constraints.push_back(std::make_shared<QuadObstacle>(pos[i], cfg.obstacles[o], cfg.d_min_o,
                                                               "obs_" + std::to_string(i) + "_" + std::to_string(o)));
  }
}

Vector load_state(const Vec3& p, const Vec3& v) {
  Vector x = Vector::Zero(13);
  x.head<3>() = p;
  x.segment<3>(3) = v;
  x(6) = 1.0;
  return x;
}

}  // namespace

ThetaLayout reference_theta_layout() {
  ThetaLayout l;
  l.add("ls.Q", 13);
  l.add("ls.QN", 13);
  l.add("ls.R", 6);
  l.add("ls.Rt", 3);
  l.add("ls.rho", 1);
  return l;
}

ThetaLayout full_theta_layout() {
  ThetaLayout l;
  l.add("l.Q", 13);
  l.add("l.QN", 13);
  l.add("l.R", 6);
  l.add("l.rho", 1);
  l.add("c.Q", 8);
  l.add("c.QN", 8);
  l.add("c.R", 4);
  l.add("c.rho", 1);
  return l;
}

HyperParams default_reference_theta() {
  Vector th(36);
  th << 50, 50, 50, 5, 5, 5, 1, 1, 1, 1, 1, 1, 1,  // Q
      100, 100, 100, 10, 10, 10, 5, 5, 5, 5, 5, 5, 5,  // QN
      0.1, 0.1, 0.1, 1, 1, 1,                           // R
      1, 1, 1,                                          // R_t
      5;                                                // rho
  return hyper_params_from_theta(th, reference_theta_layout());
}

HyperParams default_full_theta() {
  Vector th(54);
  th << 50, 50, 50, 5, 5, 5, 1, 1, 1, 1, 1, 1, 1,  // load Q
      100, 100, 100, 10, 10, 10, 5, 5, 5, 5, 5, 5, 5,  // load QN
      0.1, 0.1, 0.1, 1, 1, 1,                           // load R
      5,                                                // rho_l
      20, 20, 20, 1, 1, 1, 0.5, 0.1,                    // cable Q
      20, 20, 20, 1, 1, 1, 0.5, 0.1,                    // cable QN
      1, 1, 1, 0.01,                                    // cable R
      5;                                                // rho_c
  return hyper_params_from_theta(th, full_theta_layout());
}

LoadReference make_load_reference(const MultiliftConfig& cfg, const Vec3& start, const Vec3& goal) {
  const int N = cfg.horizon;
  const double T = N * cfg.dt;
  LoadReference ref;
  for (int k = 0; k <= N; ++k) {
    const double s = static_cast<double>(k) / N;
    const double pos = s * s * s * (10 - 15 * s + 6 * s * s);
    const double vel = 30 * s * s * (1 - s) * (1 - s) / T;
    ref.x.push_back(load_state(start + pos * (goal - start), vel * (goal - start)));
  }
  ref.u.assign(N, static_wrench(cfg));
  return ref;
}

Problem cable_reference_problem(const MultiliftConfig& cfg, const LoadReference& ref) {
  cfg.validate();
  const int N = cfg.horizon;
  if (static_cast<int>(ref.x.size()) != N + 1 || static_cast<int>(ref.u.size()) != N)
    throw ConfigError("load reference must have N+1 states and N controls");
  if (cfg.n * cfg.tension_max() <= cfg.m_l * cfg.g)
    throw InfeasibleError("tension allocation infeasible: n * t_max does not exceed the load weight");

  Problem pb;
  pb.horizon = N;
  pb.layout = reference_theta_layout();
  AgentSpec a;
  a.name = "load";
  a.model = std::make_shared<LoadModel>(cfg);
  a.cost.q = Vector::Ones(13);
  a.cost.qN = Vector::Ones(13);
  a.cost.r = Vector::Ones(6);
  a.cost.x_ref = ref.x;
  a.cost.u_ref = ref.u;
  a.binding = {pb.layout.offset("ls.Q"), pb.layout.offset("ls.R"), pb.layout.offset("ls.QN"),
               pb.layout.offset("ls.rho")};
  a.x0 = ref.x.front();
  pb.agents.push_back(a);

  const int naux = 3 * cfg.n - 6;
  const Vec3 t_ref(0, 0, cfg.m_l * cfg.g / cfg.n);
  Matrix A_all(3 * cfg.n, 6 + naux);
  for (int i = 0; i < cfg.n; ++i) A_all.middleRows(3 * i, 3) = tension_map(cfg, i);
  for (int k = 0; k <= N; ++k) {
    StageDef def;
    if (k == N) {
      pb.stages.push_back(def);
      continue;
    }
    def.aux_dim = naux;
    def.aux_init = Vector::Zero(naux);
    const StageLayout L = make_stage_layout({13}, {6}, false, naux);
    std::vector<int> ut = range(L.u_offset[0], 6);
    for (int j = 0; j < naux; ++j) ut.push_back(L.aux_offset + j);
    std::vector<QuadPositionPtr> pos;
    for (int i = 0; i < cfg.n; ++i) {
      const Matrix Ai = A_all.middleRows(3 * i, 3);
      def.constraints.push_back(
          std::make_shared<TensionNormBound>(ut, Ai, cfg.tension_max(), "tmax_" + std::to_string(i)));
      def.constraints.push_back(
          std::make_shared<LinearInequality>(ut, Vector(-Ai.row(2).transpose()), 0.0, "tmin_" + std::to_string(i)));
      pos.push_back(std::make_shared<TensionPositionMap>(cfg, i, L.x_offset[0], L.u_offset[0], L.aux_offset));
    }
    add_separation(cfg, pos, def);
    def.costs.push_back(std::make_shared<TensionTrackingCost>(ut, A_all, t_ref, pb.layout.offset("ls.Rt")));
    pb.stages.push_back(def);
  }
  pb.validate();
  return pb;
}

CableReferences export_cable_references(const MultiliftConfig& cfg, const AdmmResult& result) {
  if (result.iterates.empty()) throw ConfigError("cable reference export needs at least one ADMM iterate");
  const AdmmIterate& last = result.iterates.back();
  const Trajectory& load = last.agents.at(0).copy;
  const int N = load.horizon();
  CableReferences out;
  out.load = load;
  out.load_primal = last.agents.at(0).primal;
  out.x_ref.assign(cfg.n, VectorSeq(N + 1));
  out.u_ref.assign(cfg.n, VectorSeq(N, Vector::Zero(4)));
  Matrix A_all(3 * cfg.n, 3 * cfg.n);
  for (int i = 0; i < cfg.n; ++i) A_all.middleRows(3 * i, 3) = tension_map(cfg, i);
  for (int k = 0; k < N; ++k) {
    Vector z(3 * cfg.n);
    z << load.controls[k], last.aux.at(k);
    const Vector t = A_all * z;
    const Mat3 R = quat_to_rot(load.states[k].segment<4>(6).normalized());
    std::vector<Vec3> tk;
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < cfg.n; ++i) {
      const Vec3 ti = t.segment<3>(3 * i);
      const double tn = ti.norm();
      if (tn < 1e-12) throw DomainError("zero tension in exported cable reference at step " + std::to_string(k));
      tk.push_back(ti);
      lo = std::min(lo, tn);
      hi = std::max(hi, tn);
      Vector x = Vector::Zero(8);
      x.head<3>() = R * ti / tn;
      x(6) = tn;
      out.x_ref[i][k] = x;
    }
    out.spread = std::max(out.spread, hi - lo);
    out.tension.push_back(tk);
  }
  for (int i = 0; i < cfg.n; ++i) out.x_ref[i][N] = out.x_ref[i][N - 1];
  return out;
}

Problem multilift_problem(const MultiliftConfig& cfg, const LoadReference& load_ref, const CableReferences& cables,
                          const MultiliftOptions& opts) {
  cfg.validate();
  const int N = cfg.horizon;
  if (static_cast<int>(cables.x_ref.size()) != cfg.n) throw ConfigError("need one cable reference per cable");
  Problem pb;
  pb.horizon = N;
  pb.layout = full_theta_layout();

  AgentSpec load;
  load.name = "load";
  load.model = std::make_shared<LoadModel>(cfg);
  load.cost.q = Vector::Ones(13);
  load.cost.qN = Vector::Ones(13);
  load.cost.r = Vector::Ones(6);
  load.cost.x_ref = load_ref.x;
  load.cost.u_ref = load_ref.u;
  load.binding = {pb.layout.offset("l.Q"), pb.layout.offset("l.R"), pb.layout.offset("l.QN"),
                  pb.layout.offset("l.rho")};
  load.x0 = load_ref.x.front();
  // The primal is a DDP rollout, so replaying its controls reproduces it; the copy controls
  // are not dynamically consistent and an open-loop replay can tumble an offset load.
  if (opts.warm_start_load && cables.load_primal.horizon() == N) {
    load.initial_guess = rollout(*load.model, load.x0, cables.load_primal.controls, Vector());
  }
  pb.agents.push_back(load);

  const auto cable_model = std::make_shared<CableModel>(cfg.dt);
  for (int i = 0; i < cfg.n; ++i) {
    AgentSpec c;
    c.name = "cable" + std::to_string(i);
    c.model = cable_model;
    c.cost.q = Vector::Ones(8);
    c.cost.qN = Vector::Ones(8);
    c.cost.r = Vector::Ones(4);
    c.cost.x_ref = cables.x_ref[i];
    c.cost.u_ref = cables.u_ref[i];
    c.binding = {pb.layout.offset("c.Q"), pb.layout.offset("c.R"), pb.layout.offset("c.QN"),
                 pb.layout.offset("c.rho")};
    c.x0 = cables.x_ref[i].front();
    pb.agents.push_back(c);
  }

  std::vector<int> sdims{13}, cdims{6};
  for (int i = 0; i < cfg.n; ++i) {
    sdims.push_back(8);
    cdims.push_back(4);
  }
  for (int k = 0; k <= N; ++k) {
    const bool term = k == N;
    const StageLayout L = make_stage_layout(sdims, cdims, term, 0);
    StageDef def;
    std::vector<QuadPositionPtr> pos;
    for (int i = 0; i < cfg.n; ++i) {
      const int ti = L.x_offset[i + 1] + 6;
      const std::string s = std::to_string(i);
      def.constraints.push_back(
          std::make_shared<LinearInequality>(std::vector<int>{ti}, Vector::Ones(1), cfg.tension_max(), "tmax_" + s));
      def.constraints.push_back(
          std::make_shared<LinearInequality>(std::vector<int>{ti}, -Vector::Ones(1), 0.0, "tmin_" + s));
      pos.push_back(std::make_shared<CablePositionMap>(cfg, i, L.x_offset[0], L.x_offset[i + 1]));
      if (!term) def.constraints.push_back(std::make_shared<ThrustLimit>(cfg, i, L, i + 1));
    }
    add_separation(cfg, pos, def);
    if (!term) def.costs.push_back(std::make_shared<WrenchConsistency>(cfg, L, opts.kappa));
    pb.stages.push_back(def);
  }
  pb.validate();
  return pb;
}

std::vector<Vec3> feedback_augmentation(const MultiliftConfig& cfg, const Vector& x_l, const Vector& x_star,
                                        const std::vector<double>& t_star, const std::vector<Vec3>& d_star,
                                        const Matrix& K, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("feedback discount must lie in [0, 1)");
  if (static_cast<int>(t_star.size()) != cfg.n || static_cast<int>(d_star.size()) != cfg.n)
    throw ConfigError("feedback augmentation needs one tension and direction per cable");
  if (K.rows() != 6 || K.cols() != 13) throw ConfigError("load feedback gain must be 6 x 13");
  const Matrix P = wrench_map(cfg);
  const Matrix Pp = P.transpose() * (P * P.transpose()).inverse();
  const Vector dt = alpha * Pp * (K * (x_l - x_star));
  // P^+ yields body-frame tension corrections; the references are world-frame.
  const Mat3 R = quat_to_rot(x_star.segment<4>(6));
  std::vector<Vec3> out;
  for (int i = 0; i < cfg.n; ++i) {
    const Vec3 f = t_star[i] * d_star[i] + R * dt.segment<3>(3 * i);
    const double fn = f.norm();
    if (fn < 1e-12) throw DomainError("feedback augmentation cancels the tension of cable " + std::to_string(i));
    out.push_back(f / fn);
  }
  return out;
}

}  // namespace l2c
