#pragma once

#include "l2c/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace l2c {

/**
 * @brief Smooth scalar function of a subset of a stage's stacked variables.
 *
 * Used both for inequality constraints (g <= 0) and for extra stage cost terms.
 * Evaluators receive only the local sub-vector w[indices()]. Gradients default
 * to central differences of value(); Hessians default to central differences
 * of gradient(), so subclasses should at least override gradient().
 */
class StageFunction {
 public:
  StageFunction(std::vector<int> indices, std::string name);
  virtual ~StageFunction() = default;

  const std::vector<int>& indices() const { return indices_; }
  const std::string& name() const { return name_; }
  int local_dim() const { return static_cast<int>(indices_.size()); }

  virtual double value(const Vector& w, const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& w, const Vector& theta) const;
  virtual Matrix hessian(const Vector& w, const Vector& theta) const;
  /// d gradient / d theta (local_dim x theta.size()). Default zero.
  virtual Matrix mixed_theta(const Vector& w, const Vector& theta) const;

  Vector gather(const Vector& full) const;

 private:
  std::vector<int> indices_;
  std::string name_;
};

using StageFunctionPtr = std::shared_ptr<const StageFunction>;

/// Constraints and extra costs of one stage-wise static problem, plus extra
/// variables that have no consensus counterpart (appended after the copies).
struct StageDef {
  int aux_dim = 0;
  Vector aux_init;
  std::vector<StageFunctionPtr> constraints;
  std::vector<StageFunctionPtr> costs;
};

/// Where each agent's copy blocks live inside a stage vector.
struct StageLayout {
  std::vector<int> x_offset;
  std::vector<int> u_offset;  // -1 at the terminal stage
  int aux_offset = 0;
  int aux_dim = 0;
  int dim = 0;
};

/// Stage vector order: [x_1; u_1; ...; x_n; u_n; aux] (no controls at k = N).
StageLayout make_stage_layout(const std::vector<int>& state_dims, const std::vector<int>& control_dims,
                              bool terminal, int aux_dim);

struct BarrierOptions {
  double mu_initial = 1.0;
  double mu_final = 1e-4;
  double mu_factor = 0.1;
  double newton_tol = 1e-8;
  double decrement_tol = 1e-20;  // stop when grad^T H^-1 grad falls below this
  int max_newton = 100;
  double repair_margin = 1e-3;
  int max_repair = 500;
};

struct StageSolveResult {
  Vector w;
  double mu = 0.0;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  bool accurate = true;
};

/**
 * minimize 1/2 sum_j weight_j (w_j - target_j)^2 + sum costs(w) - mu sum ln(-g(w))
 * over a decreasing mu schedule, starting from a strictly feasible point
 * derived from w_init.
 */
StageSolveResult solve_stage(const StageDef& def, const Vector& target, const Vector& weight,
                             const Vector& theta, const Vector& w_init, const BarrierOptions& opts = {});

/// Pushes w into the strict interior (all g <= -margin). Throws InfeasibleError.
Vector repair_feasibility(const StageDef& def, const Vector& w, const Vector& theta, double margin,
                          int max_sweeps);

bool strictly_feasible(const StageDef& def, const Vector& w, const Vector& theta);
double max_constraint(const StageDef& def, const Vector& w, const Vector& theta);

/// Non-proximal curvature at w: cost-term Hessians plus the barrier Hessian at mu,
/// and the explicit theta-derivative of the non-proximal gradient.
struct StageCurvature {
  Matrix L;        // dim x dim
  Matrix L_theta;  // dim x p
};
StageCurvature stage_curvature(const StageDef& def, const Vector& w, const Vector& theta, double mu);

// Generic stage functions.

/// a^T w_local - b <= 0.
class LinearInequality final : public StageFunction {
 public:
  LinearInequality(std::vector<int> indices, Vector a, double b, std::string name);
  double value(const Vector& w, const Vector&) const override;
  Vector gradient(const Vector& w, const Vector&) const override;
  Matrix hessian(const Vector& w, const Vector&) const override;

 private:
  Vector a_;
  double b_;
};

/// d_min^2 - |w[a] - w[b]|^2 <= 0 for two equally sized index blocks.
class SeparationInequality final : public StageFunction {
 public:
  SeparationInequality(const std::vector<int>& a, const std::vector<int>& b, double d_min, std::string name);
  double value(const Vector& w, const Vector&) const override;
  Vector gradient(const Vector& w, const Vector&) const override;
  Matrix hessian(const Vector& w, const Vector&) const override;

 private:
  int half_;
  double d2_;
};

/// kappa/2 |w[a] - w[b]|^2.
class CouplingPenalty final : public StageFunction {
 public:
  CouplingPenalty(const std::vector<int>& a, const std::vector<int>& b, double kappa, std::string name);
  double value(const Vector& w, const Vector&) const override;
  Vector gradient(const Vector& w, const Vector&) const override;
  Matrix hessian(const Vector& w, const Vector&) const override;

 private:
  int half_;
  double kappa_;
};

}  // namespace l2c
