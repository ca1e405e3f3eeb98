#pragma once

#include "l2c/instances.hpp"
#include "l2c/multilift_problems.hpp"

#include <cstdint>
#include <string>

namespace l2c {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ScenarioKind { ConsensusToy, MultiliftReference, MultiliftFull };

/// A runnable problem description read from JSON. Field names are listed in the README.
struct Scenario {
  ScenarioKind kind = ScenarioKind::MultiliftFull;
  std::uint64_t seed = 7;
  int a_max = 10;
  int reference_iters = 10;  // full kind: ADMM iterations of the cable-reference solve
  MultiliftConfig multilift = MultiliftConfig::symmetric(3);
  Vec3 start = Vec3(0, 0, 1);
  Vec3 goal = Vec3(1, 0, 1);
  ConsensusToyOptions toy;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

const char* scenario_kind_name(ScenarioKind k);

/// Built problem plus the default hyperparameters for it.
struct ScenarioProblem {
  Problem problem;
  HyperParams theta;
  LoadReference load_ref;         // multilift kinds only
  CableReferences cable_refs;     // full kind only
};

/// For the full kind the cable references come from a reference solve with theta_ls
/// (defaults when empty).
ScenarioProblem build_scenario(const Scenario& s, const HyperParams* theta_ls = nullptr);

}  // namespace l2c
