#pragma once

#include "l2c/agent_model.hpp"
#include "l2c/rotation.hpp"

#include <vector>

namespace l2c {

struct MultiliftConfig {
  int n = 3;
  double m_l = 3.0;
  Mat3 J_l = Vec3(0.05, 0.05, 0.09).asDiagonal();
  Vec3 r_g = Vec3::Zero();
  std::vector<Vec3> r;  // attachment points, body frame
  std::vector<double> l;
  std::vector<double> m_q;  // quadrotor masses
  double t_max = 0.0;       // 0 means 3 m_l g / n
  double f_max = 50.0;
  double d_min_q = 0.3;
  double d_min_o = 0.5;
  std::vector<Vec3> obstacles;
  double dt = 0.1;
  int horizon = 20;
  double g = 9.81;

  /// Symmetric rig: attachments on a circle of the given radius.
  static MultiliftConfig symmetric(int n, double radius = 0.3);
  double tension_max() const { return t_max > 0.0 ? t_max : 3.0 * m_l * g / n; }
  void validate() const;
};

/// 6 x 3n map from body-frame cable forces to [F; M].
Matrix wrench_map(const MultiliftConfig& cfg);

struct WrenchData {
  Vector wrench;  // [F_l; M_l]
  Matrix P;       // 6 x 3n
  Matrix N;       // 3n x (3n - 6), orthonormal columns
  Matrix P_pinv;  // 3n x 6
};

/// Wrench from world-frame directions and tension magnitudes, plus P, its null space and pseudo-inverse.
WrenchData wrench_and_nullspace(const MultiliftConfig& cfg, const Mat3& R_l, const std::vector<double>& tensions,
                                const std::vector<Vec3>& directions);

/// Static equilibrium wrench for a load at rest with attitude R_l (includes the CoM offset torque).
Vector static_wrench(const MultiliftConfig& cfg, const Mat3& R_l = Mat3::Identity());

/// Coupled translational/rotational accelerations [vdot; wdot] (body frame).
class LoadAccel {
 public:
  explicit LoadAccel(const MultiliftConfig& cfg);
  Vector operator()(const Vector& x, const Vector& u) const;
  /// Jacobians of [vdot; wdot] with respect to x (6 x 13) and u (6 x 6).
  void jacobians(const Vector& x, const Vector& u, Matrix& ax, Matrix& au) const;

 private:
  Eigen::Matrix<double, 6, 1> rhs(const Vector& x, const Vector& u) const;
  MultiliftConfig cfg_;
  Eigen::Matrix<double, 6, 6> Ainv_;
};

Vector load_accel(const MultiliftConfig& cfg, const Vector& x, const Vector& u);

/// Load: x = [p (world); v (body); q; w (body)], u = [F; M] (body). RK4 + quaternion renormalization.
class LoadModel final : public AgentModel {
 public:
  explicit LoadModel(const MultiliftConfig& cfg);
  int state_dim() const override { return 13; }
  int control_dim() const override { return 6; }
  Vector step(const Vector& x, const Vector& u, const Vector& theta) const override;
  void jacobians(const Vector& x, const Vector& u, const Vector& theta, Matrix& fx, Matrix& fu) const override;
  Vector deriv(const Vector& x, const Vector& u) const;
  void deriv_jacobians(const Vector& x, const Vector& u, Matrix& A, Matrix& B) const;
  double dt() const { return dt_; }

 private:
  LoadAccel accel_;
  double dt_;
};

/// Cable: x = [d; w; t; v], u = [gamma; a]. RK4 + direction renormalization.
class CableModel final : public AgentModel {
 public:
  explicit CableModel(double dt);
  int state_dim() const override { return 8; }
  int control_dim() const override { return 4; }
  Vector step(const Vector& x, const Vector& u, const Vector& theta) const override;
  void jacobians(const Vector& x, const Vector& u, const Vector& theta, Matrix& fx, Matrix& fu) const override;
  Vector deriv(const Vector& x, const Vector& u) const;
  void deriv_jacobians(const Vector& x, const Vector& u, Matrix& A, Matrix& B) const;

 private:
  double dt_;
};

}  // namespace l2c
