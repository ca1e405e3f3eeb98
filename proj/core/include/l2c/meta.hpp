#pragma once

#include "l2c/gradsolver.hpp"

#include <random>
#include <vector>

namespace l2c {

/// Raised by the meta-learning loop (non-finite gradients, empty episodes).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Fully connected net: ReLU hidden layers, sigmoid outputs.
/// Flat parameters are ordered per layer as [W (row-major, out x in); b].
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> dims);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  static Mlp random(std::vector<int> dims, std::mt19937_64& rng);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int param_count() const { return static_cast<int>(params_.size()); }
  const Vector& params() const { return params_; }
  void set_params(const Vector& p);

  /// Outputs in (0,1); optionally the output_dim x param_count Jacobian.
  Vector forward(const Vector& input, Matrix* jacobian = nullptr) const;

 private:
  std::vector<int> dims_;
  Vector params_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m, v;
  int t = 0;
};

/// Bias-corrected Adam step. Throws TrainingError on a non-finite gradient.
void adam_step(Vector& params, const Vector& grad, AdamState& state, const AdamOptions& opts = {});

/// Reference and diagonal weights for the tracking term of one agent.
struct TrackingTarget {
  VectorSeq x_ref;  // N+1
  VectorSeq u_ref;  // N
  Vector wx, wu;
};

struct AgentLoss {
  double tracking = 0.0;  // |tau - tau_ref|_W^2
  double residual = 0.0;  // |tau - tau~|^2
  VectorSeq dx, du;       // d loss / d primal
  VectorSeq dxc, duc;     // d loss / d copies
};

struct UpperLoss {
  double total = 0.0;
  std::vector<AgentLoss> agents;
};

UpperLoss upper_loss(const std::vector<Trajectory>& primal, const std::vector<Trajectory>& copies,
                     const std::vector<TrackingTarget>& targets);

/// Loss from the last stored iterate of a forward run.
UpperLoss upper_loss(const AdmmIterate& last, const std::vector<TrackingTarget>& targets);

/// dL/dtheta = sum over agents and steps of the partials times the trajectory Jacobians.
Vector loss_theta_gradient(const UpperLoss& loss, const GradIterate& grads);

/// dL/dparams of a network whose outputs drive theta[offset, offset + outputs).
Vector assemble_grad(const UpperLoss& loss, const GradIterate& grads, const Vector& dtheta_draw,
                     const Matrix& net_jacobian, int offset);

/// Positions weighted 1, everything else 0.1 (the load); cables get 0.1 throughout.
TrackingTarget load_tracking_target(const VectorSeq& x_ref, const VectorSeq& u_ref);
TrackingTarget cable_tracking_target(const VectorSeq& x_ref, const VectorSeq& u_ref);

}  // namespace l2c
