#pragma once

#include "l2c/gradsolver.hpp"
#include "l2c/multilift_models.hpp"

#include <string>
#include <vector>

namespace l2c {

/// One agent's matrix-valued LQR at a given gradient iteration, with the DDP workspace it reuses.
struct AuxInstance {
  std::string name;
  AuxLqrData aux;
  DdpWorkspace workspace;
};

/// Subsystem-1 data of every agent at the last forward iterate. grads must keep its history.
std::vector<AuxInstance> last_iteration_aux(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                                            const GradResult& grads);

struct SolverAgreement {
  double reuse_vs_pmp = 0.0;
  double reuse_vs_augmented = 0.0;
  double pmp_vs_augmented = 0.0;
};

/// Mean per-step relative error on the state gradients of the three auxiliary LQR solvers.
SolverAgreement compare_aux_solvers(const AuxInstance& inst);

/// The three benchmark shapes on the desk-scale 3-cable rig:
/// "13x36" (load, cable-reference problem), "13x54" (load) and "8x54" (first cable, full problem).
std::vector<AuxInstance> standard_shape_instances(int horizon, int a_max = 2);
std::vector<AuxInstance> standard_shape_instances(const MultiliftConfig& cfg, const Vec3& start, const Vec3& goal,
                                               int a_max = 2);

}  // namespace l2c
