#pragma once

#include "l2c/types.hpp"

#include <memory>

namespace l2c {

/**
 * @brief Discrete-time agent dynamics x_{k+1} = f(x_k, u_k, theta).
 *
 * theta is always the full hyperparameter vector, so jac_theta has one column
 * per entry of the layout. Models that do not depend on theta return zeros.
 */
class AgentModel {
 public:
  virtual ~AgentModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  virtual Vector step(const Vector& x, const Vector& u, const Vector& theta) const = 0;

  /// Fills fx (n x n) and fu (n x m).
  virtual void jacobians(const Vector& x, const Vector& u, const Vector& theta, Matrix& fx,
                         Matrix& fu) const = 0;

  /// n x theta.size(). Default: zeros.
  virtual Matrix jac_theta(const Vector& x, const Vector& u, const Vector& theta) const;

  /**
   * Contraction of the second derivatives with a weight vector w (size n):
   * hxx = sum_j w_j d2f_j/dx2, likewise hxu and huu. The default uses central
   * differences of jacobians(); linear models override with zeros.
   */
  virtual void second_order(const Vector& x, const Vector& u, const Vector& theta, const Vector& w,
                            Matrix& hxx, Matrix& hxu, Matrix& huu) const;

  Matrix jac_x(const Vector& x, const Vector& u, const Vector& theta) const;
  Matrix jac_u(const Vector& x, const Vector& u, const Vector& theta) const;
};

using AgentModelPtr = std::shared_ptr<const AgentModel>;

/// x' = A x + B u + E theta. E may be empty (no theta dependence).
class LinearAgent final : public AgentModel {
 public:
  LinearAgent(Matrix A, Matrix B, Matrix E = Matrix());

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  Vector step(const Vector& x, const Vector& u, const Vector& theta) const override;
  void jacobians(const Vector& x, const Vector& u, const Vector& theta, Matrix& fx,
                 Matrix& fu) const override;
  Matrix jac_theta(const Vector& x, const Vector& u, const Vector& theta) const override;
  void second_order(const Vector& x, const Vector& u, const Vector& theta, const Vector& w,
                    Matrix& hxx, Matrix& hxu, Matrix& huu) const override;

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }

 private:
  Matrix A_, B_, E_;
};

AgentModelPtr make_linear_test_agent(int state_dim, int control_dim, const Matrix& A,
                                     const Matrix& B);

/// Discrete double integrator per axis: position/velocity pairs, acceleration input.
AgentModelPtr make_double_integrator(int axes, double dt);

}  // namespace l2c
