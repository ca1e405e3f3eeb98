#pragma once

#include "l2c/admm.hpp"
#include "l2c/gradsolver.hpp"

#include <random>

namespace l2c {

struct ConsensusToyOptions {
  int horizon = 20;
  double dt = 0.1;
  double coupling = 5.0;      // terminal agreement penalty
  double position_bound = 0;  // > 0 adds p~ <= bound on agent 0 at every stage
};

/**
 * Two 1-axis double integrators pulled toward +1 and -1 that must agree on
 * their terminal state (penalized in the terminal static problem).
 * theta = [Q_0(2) R_0(1) QN_0(2) rho_0 | Q_1 R_1 QN_1 rho_1], 12 entries.
 */
Problem make_consensus_toy(const ConsensusToyOptions& opts = {});
HyperParams consensus_toy_theta(const Problem& toy);

struct RandomLqrInstance {
  AuxLqrData aux;
  DdpWorkspace workspace;
};

/// Random convex single-agent instance: DDP workspace of a random augmented LQ
/// problem plus dense random coupling terms and f_theta.
RandomLqrInstance random_aux_lqr_instance(int n, int m, int p, int N, std::mt19937_64& rng);

}  // namespace l2c
