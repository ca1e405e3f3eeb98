#include "l2c/agent_model.hpp"
#include "l2c/cost.hpp"

#include <cmath>

namespace l2c {

Matrix AgentModel::jac_theta(const Vector& x, const Vector& /*u*/, const Vector& theta) const {
  return Matrix::Zero(x.size(), theta.size());
}

Matrix AgentModel::jac_x(const Vector& x, const Vector& u, const Vector& theta) const {
  Matrix fx, fu;
  jacobians(x, u, theta, fx, fu);
  return fx;
}

Matrix AgentModel::jac_u(const Vector& x, const Vector& u, const Vector& theta) const {
  Matrix fx, fu;
  jacobians(x, u, theta, fx, fu);
  return fu;
}

void AgentModel::second_order(const Vector& x, const Vector& u, const Vector& theta,
                              const Vector& w, Matrix& hxx, Matrix& hxu, Matrix& huu) const {
  const int n = state_dim();
  const int m = control_dim();
  hxx.setZero(n, n);
  hxu.setZero(n, m);
  huu.setZero(m, m);
  Matrix fxp, fup, fxm, fum;
  // d/dz_j of (w^T f_x) and (w^T f_u), z = [x; u].
  for (int j = 0; j < n + m; ++j) {
    Vector xp = x, xm = x, up = u, um = u;
    const double base = j < n ? x(j) : u(j - n);
    const double h = 1e-5 * std::max(1.0, std::abs(base));
    if (j < n) {
      xp(j) += h;
      xm(j) -= h;
    } else {
      up(j - n) += h;
      um(j - n) -= h;
    }
    jacobians(xp, up, theta, fxp, fup);
    jacobians(xm, um, theta, fxm, fum);
    const Vector dgx = (fxp.transpose() * w - fxm.transpose() * w) / (2 * h);
    const Vector dgu = (fup.transpose() * w - fum.transpose() * w) / (2 * h);
    if (j < n) {
      hxx.col(j) = dgx;
      hxu.row(j) = dgu.transpose();
    } else {
      huu.col(j - n) = dgu;
    }
  }
  hxx = 0.5 * (hxx + hxx.transpose()).eval();
  huu = 0.5 * (huu + huu.transpose()).eval();
}

LinearAgent::LinearAgent(Matrix A, Matrix B, Matrix E) : A_(std::move(A)), B_(std::move(B)), E_(std::move(E)) {
  if (A_.rows() != A_.cols()) throw ConfigError("linear agent: A must be square");
  if (B_.rows() != A_.rows()) throw ConfigError("linear agent: B rows must equal state dim");
  if (E_.size() > 0 && E_.rows() != A_.rows()) throw ConfigError("linear agent: E rows must equal state dim");
}

Vector LinearAgent::step(const Vector& x, const Vector& u, const Vector& theta) const {
  Vector next = A_ * x + B_ * u;
  if (E_.size() > 0) {
    if (theta.size() != E_.cols()) throw ConfigError("linear agent: theta size does not match E");
    next += E_ * theta;
  }
  return next;
}

void LinearAgent::jacobians(const Vector&, const Vector&, const Vector&, Matrix& fx, Matrix& fu) const {
  fx = A_;
  fu = B_;
}

Matrix LinearAgent::jac_theta(const Vector& x, const Vector&, const Vector& theta) const {
  if (E_.size() > 0) return E_;
  return Matrix::Zero(x.size(), theta.size());
}

void LinearAgent::second_order(const Vector&, const Vector&, const Vector&, const Vector&,
                               Matrix& hxx, Matrix& hxu, Matrix& huu) const {
  hxx.setZero(A_.rows(), A_.rows());
  hxu.setZero(A_.rows(), B_.cols());
  huu.setZero(B_.cols(), B_.cols());
}

AgentModelPtr make_linear_test_agent(int state_dim, int control_dim, const Matrix& A, const Matrix& B) {
  if (state_dim <= 0 || control_dim <= 0) throw ConfigError("linear agent: dimensions must be positive");
  if (A.rows() != state_dim || A.cols() != state_dim) throw ConfigError("linear agent: A has wrong shape");
  if (B.rows() != state_dim || B.cols() != control_dim) throw ConfigError("linear agent: B has wrong shape");
  return std::make_shared<LinearAgent>(A, B);
}

AgentModelPtr make_double_integrator(int axes, double dt) {
  Matrix A = Matrix::Identity(2 * axes, 2 * axes);
  Matrix B = Matrix::Zero(2 * axes, axes);
  for (int a = 0; a < axes; ++a) {
    A(2 * a, 2 * a + 1) = dt;
    B(2 * a, a) = 0.5 * dt * dt;
    B(2 * a + 1, a) = dt;
  }
  return std::make_shared<LinearAgent>(A, B);
}

// QuadraticCost

double QuadraticCost::stage(int k, const Vector& x, const Vector& u) const {
  const Vector dx = x - x_ref[k];
  const Vector du = u - u_ref[k];
  return 0.5 * (dx.cwiseProduct(q).dot(dx) + du.cwiseProduct(r).dot(du));
}

double QuadraticCost::terminal(const Vector& x) const {
  const Vector dx = x - x_ref.back();
  return 0.5 * dx.cwiseProduct(qN).dot(dx);
}

double QuadraticCost::total(const Trajectory& t) const {
  double c = 0.0;
  for (int k = 0; k < t.horizon(); ++k) c += stage(k, t.states[k], t.controls[k]);
  return c + terminal(t.states.back());
}

void QuadraticCost::validate(int n, int m) const {
  if (q.size() != n || qN.size() != n || r.size() != m) throw ConfigError("cost weights have wrong size");
  if (x_ref.size() != u_ref.size() + 1) throw ConfigError("cost references need N+1 states and N controls");
  for (const auto& x : x_ref)
    if (x.size() != n) throw ConfigError("cost x_ref has wrong size");
  for (const auto& u : u_ref)
    if (u.size() != m) throw ConfigError("cost u_ref has wrong size");
  if ((q.array() < 0).any() || (r.array() < 0).any() || (qN.array() < 0).any())
    throw ConfigError("cost weights must be nonnegative");
}

QuadraticCost QuadraticCost::tracking(const Vector& q, const Vector& r, const Vector& qN,
                                      const Vector& x_ref, const Vector& u_ref, int N) {
  QuadraticCost c;
  c.q = q;
  c.r = r;
  c.qN = qN;
  c.x_ref.assign(N + 1, x_ref);
  c.u_ref.assign(N, u_ref);
  return c;
}

}  // namespace l2c
