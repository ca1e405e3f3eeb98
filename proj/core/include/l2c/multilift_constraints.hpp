#pragma once

#include "l2c/multilift_models.hpp"
#include "l2c/stage.hpp"

#include <memory>

namespace l2c {

/// Position of one quadrotor as a function of a few stage-vector entries.
class QuadPositionMap {
 public:
  virtual ~QuadPositionMap() = default;
  virtual const std::vector<int>& indices() const = 0;
  /// Position and its 3 x indices().size() Jacobian at the local sub-vector.
  virtual Vec3 eval(const Vector& local, Matrix* J) const = 0;
  /// sum_c e_c d^2 p_c / d local^2.
  virtual Matrix weighted_hessian(const Vector& local, const Vec3& e) const = 0;
};
using QuadPositionPtr = std::shared_ptr<const QuadPositionMap>;

/// p_i = p_l + R_l r_i + l_i d_i. Local order [p_l; q_l; d_i].
class CablePositionMap final : public QuadPositionMap {
 public:
  CablePositionMap(const MultiliftConfig& cfg, int cable, int load_x_offset, int cable_x_offset);
  const std::vector<int>& indices() const override { return idx_; }
  Vec3 eval(const Vector& local, Matrix* J) const override;
  Matrix weighted_hessian(const Vector& local, const Vec3& e) const override;

 private:
  std::vector<int> idx_;
  Vec3 r_;
  double l_;
};

/// p_i = p_l + R_l (r_i + l_i t_i / |t_i|), t = P^+ u_l + N Pi. Local order [p_l; q_l; u_l; Pi].
class TensionPositionMap final : public QuadPositionMap {
 public:
  TensionPositionMap(const MultiliftConfig& cfg, int cable, int load_x_offset, int load_u_offset, int aux_offset);
  const std::vector<int>& indices() const override { return idx_; }
  Vec3 eval(const Vector& local, Matrix* J) const override;
  Matrix weighted_hessian(const Vector& local, const Vec3& e) const override;

 private:
  std::vector<int> idx_;
  Vec3 r_;
  double l_;
  Matrix A_;  // 3 x (6 + aux): t_i = A [u_l; Pi]
};

/// Rows of [P^+ N] belonging to cable i (body-frame tension as a linear map of [u_l; Pi]).
Matrix tension_map(const MultiliftConfig& cfg, int cable);

/// d_min^2 - |p_a - p_b|^2 <= 0.
class QuadSeparation final : public StageFunction {
 public:
  QuadSeparation(QuadPositionPtr a, QuadPositionPtr b, double d_min, std::string name);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;

 private:
  QuadPositionPtr a_, b_;
  int na_;
  double d2_;
};

/// d_min^2 - |p_a - p_o|^2 <= 0.
class QuadObstacle final : public StageFunction {
 public:
  QuadObstacle(QuadPositionPtr a, const Vec3& p_o, double d_min, std::string name);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;

 private:
  QuadPositionPtr a_;
  Vec3 po_;
  double d2_;
};

/// |m_i (p_i'' + g e3) + t_i d_i|^2 - f_max^2 <= 0 with p_i'' from differentiated kinematics.
/// Local order [x_l; u_l; x_i; u_i]. Hessian is Gauss-Newton.
class ThrustLimit final : public StageFunction {
 public:
  ThrustLimit(const MultiliftConfig& cfg, int cable, const StageLayout& layout, int cable_agent);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;
  /// Required thrust vector and its Jacobian with respect to the local vector.
  Vec3 thrust(const Vector& w, Matrix* J) const;

 private:
  LoadAccel accel_;
  Vec3 r_;
  double l_, m_, g_, f2_;
};

/// kappa/2 |u_l - P stack(R_l^T t_i d_i)|^2.
/// Local order [q_l; u_l; d_1; t_1; ...; d_n; t_n].
class WrenchConsistency final : public StageFunction {
 public:
  WrenchConsistency(const MultiliftConfig& cfg, const StageLayout& layout, double kappa);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;
  Vector residual(const Vector& w, Matrix* J) const;

 private:
  std::vector<Matrix> Pi_;  // 6 x 3 blocks
  double kappa_;
};

/// |t_i|^2 - t_max^2 <= 0 for t_i = A [u_l; Pi].
class TensionNormBound final : public StageFunction {
 public:
  TensionNormBound(std::vector<int> indices, Matrix A, double t_max, std::string name);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;

 private:
  Matrix A_;
  double t2_;
};

/// 1/2 sum_i |t_i - t_ref|^2_{R_t}, R_t read from theta.
class TensionTrackingCost final : public StageFunction {
 public:
  TensionTrackingCost(std::vector<int> indices, Matrix A, Vec3 t_ref, int rt_offset);
  double value(const Vector& w, const Vector& theta) const override;
  Vector gradient(const Vector& w, const Vector& theta) const override;
  Matrix hessian(const Vector& w, const Vector& theta) const override;
  Matrix mixed_theta(const Vector& w, const Vector& theta) const override;

 private:
  Vector weights(const Vector& theta) const;
  Matrix A_;  // 3n x local
  Vec3 t_ref_;
  int rt_;
};

}  // namespace l2c
