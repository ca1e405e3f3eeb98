#include "l2c/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace l2c {

namespace {

using nlohmann::json;

Vec3 vec3(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError(std::string(what) + " must have 3 entries");
  return Vec3(v[0], v[1], v[2]);
}

json vec3_json(const Vec3& v) { return std::vector<double>{v(0), v(1), v(2)}; }

ScenarioKind kind_from(const std::string& s) {
  if (s == "consensus_toy") return ScenarioKind::ConsensusToy;
  if (s == "multilift_reference") return ScenarioKind::MultiliftReference;
  if (s == "multilift") return ScenarioKind::MultiliftFull;
  throw ConfigError("unknown scenario kind '" + s + "'");
}

MultiliftConfig multilift_from(const json& j) {
  const int n = j.value("n", 3);
  MultiliftConfig c = MultiliftConfig::symmetric(n, j.value("radius", 0.3));
  c.m_l = j.value("m_l", c.m_l);
  if (j.contains("J_l")) {
    const auto v = j["J_l"].get<std::vector<double>>();
    if (v.size() == 3) {
      c.J_l = Vec3(v[0], v[1], v[2]).asDiagonal();
    } else if (v.size() == 9) {
      c.J_l = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
    } else {
      throw ConfigError("J_l must have 3 (diagonal) or 9 (row-major) entries");
    }
  }
  if (j.contains("r_g")) c.r_g = vec3(j["r_g"], "r_g");
  if (j.contains("attachments")) {
    c.r.clear();
    for (const auto& a : j["attachments"]) c.r.push_back(vec3(a, "attachment"));
  }
  if (j.contains("cable_lengths")) c.l = j["cable_lengths"].get<std::vector<double>>();
  if (j.contains("quad_masses")) c.m_q = j["quad_masses"].get<std::vector<double>>();
  c.t_max = j.value("t_max", c.t_max);
  c.f_max = j.value("f_max", c.f_max);
  c.d_min_q = j.value("d_min_q", c.d_min_q);
  c.d_min_o = j.value("d_min_o", c.d_min_o);
  if (j.contains("obstacles"))
    for (const auto& o : j["obstacles"]) c.obstacles.push_back(vec3(o, "obstacle"));
  c.dt = j.value("dt", c.dt);
  c.horizon = j.value("horizon", c.horizon);
  c.g = j.value("g", c.g);
  c.validate();
  return c;
}

json multilift_json(const MultiliftConfig& c) {
  json j;
  j["n"] = c.n;
  j["m_l"] = c.m_l;
  std::vector<double> J(9);
  Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(J.data()) = c.J_l;
  j["J_l"] = J;
  j["r_g"] = vec3_json(c.r_g);
  j["attachments"] = json::array();
  for (const auto& r : c.r) j["attachments"].push_back(vec3_json(r));
  j["cable_lengths"] = c.l;
  j["quad_masses"] = c.m_q;
  j["t_max"] = c.t_max;
  j["f_max"] = c.f_max;
  j["d_min_q"] = c.d_min_q;
  j["d_min_o"] = c.d_min_o;
  j["obstacles"] = json::array();
  for (const auto& o : c.obstacles) j["obstacles"].push_back(vec3_json(o));
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["g"] = c.g;
  return j;
}

}  // namespace

const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::ConsensusToy: return "consensus_toy";
    case ScenarioKind::MultiliftReference: return "multilift_reference";
    case ScenarioKind::MultiliftFull: return "multilift";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.contains("schema_version")) throw ConfigError("scenario: missing schema_version");
    const int v = j["schema_version"].get<int>();
    if (v != kScenarioSchemaVersion)
      throw ConfigError("scenario: unsupported schema_version " + std::to_string(v));
    Scenario s;
    s.kind = kind_from(j.value("kind", std::string("multilift")));
    s.seed = j.value("seed", s.seed);
    s.a_max = j.value("a_max", s.a_max);
    s.reference_iters = j.value("reference_iters", s.reference_iters);
    if (s.a_max <= 0) throw ConfigError("scenario: a_max must be positive");
    if (s.kind == ScenarioKind::ConsensusToy) {
      const json t = j.value("toy", json::object());
      s.toy.horizon = t.value("horizon", s.toy.horizon);
      s.toy.dt = t.value("dt", s.toy.dt);
      s.toy.coupling = t.value("coupling", s.toy.coupling);
      s.toy.position_bound = t.value("position_bound", s.toy.position_bound);
    } else {
      s.multilift = multilift_from(j.value("multilift", json::object()));
      if (j.contains("waypoints")) {
        const auto& w = j["waypoints"];
        if (!w.is_array() || w.size() != 2) throw ConfigError("scenario: waypoints must be [start, goal]");
        s.start = vec3(w[0], "waypoint");
        s.goal = vec3(w[1], "waypoint");
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read scenario " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["kind"] = scenario_kind_name(s.kind);
  j["seed"] = s.seed;
  j["a_max"] = s.a_max;
  j["reference_iters"] = s.reference_iters;
  if (s.kind == ScenarioKind::ConsensusToy) {
    j["toy"] = {{"horizon", s.toy.horizon}, {"dt", s.toy.dt}, {"coupling", s.toy.coupling},
                {"position_bound", s.toy.position_bound}};
  } else {
    j["multilift"] = multilift_json(s.multilift);
    j["waypoints"] = {vec3_json(s.start), vec3_json(s.goal)};
  }
  return j.dump(2);
}

ScenarioProblem build_scenario(const Scenario& s, const HyperParams* theta_ls) {
  ScenarioProblem out;
  switch (s.kind) {
    case ScenarioKind::ConsensusToy:
      out.problem = make_consensus_toy(s.toy);
      out.theta = consensus_toy_theta(out.problem);
      break;
    case ScenarioKind::MultiliftReference:
      out.load_ref = make_load_reference(s.multilift, s.start, s.goal);
      out.problem = cable_reference_problem(s.multilift, out.load_ref);
      out.theta = theta_ls ? *theta_ls : default_reference_theta();
      break;
    case ScenarioKind::MultiliftFull: {
      out.load_ref = make_load_reference(s.multilift, s.start, s.goal);
      const Problem ref = cable_reference_problem(s.multilift, out.load_ref);
      const HyperParams hp_ls = theta_ls ? *theta_ls : default_reference_theta();
      out.cable_refs = export_cable_references(s.multilift, admm_run(ref, hp_ls, s.reference_iters));
      out.problem = multilift_problem(s.multilift, out.load_ref, out.cable_refs);
      out.theta = default_full_theta();
      break;
    }
  }
  return out;
}

}  // namespace l2c
