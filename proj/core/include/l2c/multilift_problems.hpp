#pragma once

#include "l2c/admm.hpp"
#include "l2c/multilift_constraints.hpp"

namespace l2c {

/// theta_ls = [Q(13) QN(13) R(6) R_t(3) rho(1)], 36 entries.
ThetaLayout reference_theta_layout();
/// theta = [theta_l: Q(13) QN(13) R(6) rho(1) | theta_c: Q(8) QN(8) R(4) rho(1)], 54 entries.
ThetaLayout full_theta_layout();

HyperParams default_reference_theta();
HyperParams default_full_theta();

struct LoadReference {
  VectorSeq x;  // N+1 load states
  VectorSeq u;  // N static-equilibrium wrenches
};

/// Quintic rest-to-rest path from start to goal over N dt with identity attitude.
LoadReference make_load_reference(const MultiliftConfig& cfg, const Vec3& start, const Vec3& goal);

/// Single load agent over (x_l, u_l) with the null-space coordinates Pi as stage aux variables.
Problem cable_reference_problem(const MultiliftConfig& cfg, const LoadReference& ref);

struct CableReferences {
  std::vector<VectorSeq> x_ref;              // per cable, N+1 states [d; 0; t; 0]
  std::vector<VectorSeq> u_ref;              // per cable, N zeros
  std::vector<std::vector<Vec3>> tension;    // per step (N), per cable, body frame
  Trajectory load;                           // optimized load trajectory (copies)
  Trajectory load_primal;                    // DDP load trajectory of the same iterate
  double spread = 0.0;                       // max_k (max_i |t_i| - min_i |t_i|)
};

/// References from the last iterate of a cable_reference_problem run.
CableReferences export_cable_references(const MultiliftConfig& cfg, const AdmmResult& result);

struct MultiliftOptions {
  double kappa = 10.0;  // wrench-consistency penalty
  bool warm_start_load = true;
};

/// Load agent plus n cable agents coupled through the stage-wise kinodynamic constraints.
Problem multilift_problem(const MultiliftConfig& cfg, const LoadReference& load_ref, const CableReferences& cables,
                          const MultiliftOptions& opts = {});

/// d_ref update from the load tracking error through the load feedback gain K (6 x 13).
std::vector<Vec3> feedback_augmentation(const MultiliftConfig& cfg, const Vector& x_l, const Vector& x_star,
                                        const std::vector<double>& t_star, const std::vector<Vec3>& d_star,
                                        const Matrix& K, double alpha);

}  // namespace l2c
