#include "l2c/multilift_models.hpp"

#include <cmath>
#include <string>

namespace l2c {

namespace {

/// RK4 step of xdot = f(x, u) with Jacobians chained through the stages, then
/// renormalization of x[norm_off : norm_off + norm_len].
template <class F, class DF>
Vector rk4(const F& f, const DF& df, const Vector& x, const Vector& u, double h, int norm_off, int norm_len,
           Matrix* Fx, Matrix* Fu) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(u.size());
  const bool jac = Fx != nullptr;
  const double c[4] = {0.0, 0.5 * h, 0.5 * h, h};
  const double wts[4] = {1.0, 2.0, 2.0, 1.0};
  Vector k_prev = Vector::Zero(n);
  Matrix dk_dx_prev = Matrix::Zero(n, n), dk_du_prev = Matrix::Zero(n, m);
  Vector acc = x;
  Matrix Ax, Bu;
  Matrix sum_dx = Matrix::Identity(n, n), sum_du = Matrix::Zero(n, m);
  for (int s = 0; s < 4; ++s) {
    const Vector xs = x + c[s] * k_prev;
    const Vector k = f(xs, u);
    acc += h / 6.0 * wts[s] * k;
    if (jac) {
      df(xs, u, Ax, Bu);
      Matrix dk_dx = Ax * (Matrix::Identity(n, n) + c[s] * dk_dx_prev);
      Matrix dk_du = Ax * (c[s] * dk_du_prev) + Bu;
      sum_dx += h / 6.0 * wts[s] * dk_dx;
      sum_du += h / 6.0 * wts[s] * dk_du;
      dk_dx_prev = std::move(dk_dx);
      dk_du_prev = std::move(dk_du);
    }
    k_prev = k;
  }
  if (!acc.allFinite()) throw RolloutError("non-finite state in RK4 step");
  const Vector seg = acc.segment(norm_off, norm_len);
  const double nrm = seg.norm();
  if (nrm < 1e-12) throw RolloutError("degenerate unit-norm block in RK4 step");
  Vector out = acc;
  out.segment(norm_off, norm_len) = seg / nrm;
  if (jac) {
    Matrix Nrm = Matrix::Identity(n, n);
    const Vector s = seg / nrm;
    Nrm.block(norm_off, norm_off, norm_len, norm_len) =
        (Matrix::Identity(norm_len, norm_len) - s * s.transpose()) / nrm;
    *Fx = Nrm * sum_dx;
    *Fu = Nrm * sum_du;
  }
  return out;
}

}  // namespace

MultiliftConfig MultiliftConfig::symmetric(int n, double radius) {
  MultiliftConfig c;
  c.n = n;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    c.r.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
    c.l.push_back(1.0);
    c.m_q.push_back(1.0);
  }
  return c;
}

void MultiliftConfig::validate() const {
  if (n < 3) throw ConfigError("multilift needs at least 3 cables");
  if (static_cast<int>(r.size()) != n || static_cast<int>(l.size()) != n || static_cast<int>(m_q.size()) != n)
    throw ConfigError("multilift attachment, length and mass lists must have n entries");
  if (m_l <= 0 || dt <= 0 || horizon <= 0) throw ConfigError("multilift mass, dt and horizon must be positive");
  for (double li : l)
    if (li <= 0) throw ConfigError("cable lengths must be positive");
  Eigen::JacobiSVD<Matrix> svd(wrench_map(*this));
  const auto& s = svd.singularValues();
  if (s(5) < 1e-9 * s(0)) throw ConfigError("wrench map is rank deficient (degenerate attachments)");
}

Matrix wrench_map(const MultiliftConfig& cfg) {
  Matrix P = Matrix::Zero(6, 3 * cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    P.block<3, 3>(0, 3 * i).setIdentity();
    P.block<3, 3>(3, 3 * i) = skew(cfg.r[i]);
  }
  return P;
}

WrenchData wrench_and_nullspace(const MultiliftConfig& cfg, const Mat3& R_l, const std::vector<double>& tensions,
                                const std::vector<Vec3>& directions) {
  if (static_cast<int>(tensions.size()) != cfg.n || static_cast<int>(directions.size()) != cfg.n)
    throw ConfigError("wrench: need one tension and direction per cable");
  WrenchData w;
  w.P = wrench_map(cfg);
  Eigen::JacobiSVD<Matrix> svd(w.P, Eigen::ComputeFullV);
  if (svd.singularValues()(5) < 1e-9 * svd.singularValues()(0))
    throw ConfigError("wrench map is rank deficient (degenerate attachments)");
  w.N = svd.matrixV().rightCols(3 * cfg.n - 6);
  w.P_pinv = w.P.transpose() * (w.P * w.P.transpose()).inverse();
  Vector s(3 * cfg.n);
  for (int i = 0; i < cfg.n; ++i) s.segment<3>(3 * i) = R_l.transpose() * (tensions[i] * directions[i]);
  w.wrench = w.P * s;
  return w;
}

Vector static_wrench(const MultiliftConfig& cfg, const Mat3& R_l) {
  const Vec3 gb = R_l.transpose() * Vec3(0, 0, cfg.g);
  Vector u(6);
  u.head<3>() = cfg.m_l * gb;
  u.tail<3>() = cfg.m_l * cfg.r_g.cross(gb);
  return u;
}

// [I, -[r_g]x; m[r_g]x, J] [vdot; wdot] = b collects the implicit CoM-offset coupling.
LoadAccel::LoadAccel(const MultiliftConfig& cfg) : cfg_(cfg) {
  Eigen::Matrix<double, 6, 6> A;
  A.setZero();
  A.topLeftCorner<3, 3>().setIdentity();
  A.topRightCorner<3, 3>() = -skew(cfg.r_g);
  A.bottomLeftCorner<3, 3>() = cfg.m_l * skew(cfg.r_g);
  A.bottomRightCorner<3, 3>() = cfg.J_l;
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(A);
  if (!lu.isInvertible()) throw DomainError("load coupling matrix is singular");
  Ainv_ = lu.inverse();
}

Eigen::Matrix<double, 6, 1> LoadAccel::rhs(const Vector& x, const Vector& u) const {
  const Vec3 v = x.segment<3>(3);
  const Vec4 q = x.segment<4>(6);
  const Vec3 w = x.segment<3>(10);
  const Vec3 F = u.head<3>();
  const Vec3 M = u.tail<3>();
  const Vec3& rg = cfg_.r_g;
  const Vec3 gb = quat_to_rot(q).transpose() * Vec3(0, 0, cfg_.g);
  Eigen::Matrix<double, 6, 1> b;
  b.head<3>() = -w.cross(v) - w.cross(w.cross(rg)) + F / cfg_.m_l - gb;
  b.tail<3>() = M - cfg_.m_l * rg.cross(gb) - w.cross(cfg_.J_l * w) - cfg_.m_l * rg.cross(w.cross(v));
  return b;
}

Vector LoadAccel::operator()(const Vector& x, const Vector& u) const { return Ainv_ * rhs(x, u); }

void LoadAccel::jacobians(const Vector& x, const Vector&, Matrix& ax, Matrix& au) const {
  const Vec3 v = x.segment<3>(3);
  const Vec4 q = x.segment<4>(6);
  const Vec3 w = x.segment<3>(10);
  const Vec3& rg = cfg_.r_g;
  const double m = cfg_.m_l;
  const Mat3 J = cfg_.J_l;
  Eigen::Matrix<double, 6, 13> bx = Eigen::Matrix<double, 6, 13>::Zero();
  const Mat34 dgb = d_rot_transpose_times(q, Vec3(0, 0, cfg_.g));
  bx.block<3, 3>(0, 3) = -skew(w);
  bx.block<3, 4>(0, 6) = -dgb;
  // d/dw of w x (w x r) = (w.r) I + w r^T - 2 r w^T
  bx.block<3, 3>(0, 10) = skew(v) - (w.dot(rg) * Mat3::Identity() + w * rg.transpose() - 2.0 * rg * w.transpose());
  bx.block<3, 3>(3, 3) = -m * skew(rg) * skew(w);
  bx.block<3, 4>(3, 6) = -m * skew(rg) * dgb;
  bx.block<3, 3>(3, 10) = -skew(w) * J + skew(J * w) + m * skew(rg) * skew(v);
  Eigen::Matrix<double, 6, 6> bu = Eigen::Matrix<double, 6, 6>::Zero();
  bu.topLeftCorner<3, 3>() = Mat3::Identity() / m;
  bu.bottomRightCorner<3, 3>().setIdentity();
  ax = Ainv_ * bx;
  au = Ainv_ * bu;
}

Vector load_accel(const MultiliftConfig& cfg, const Vector& x, const Vector& u) { return LoadAccel(cfg)(x, u); }

LoadModel::LoadModel(const MultiliftConfig& cfg) : accel_(cfg), dt_(cfg.dt) {}

Vector LoadModel::deriv(const Vector& x, const Vector& u) const {
  const Vec3 v = x.segment<3>(3);
  const Vec4 q = x.segment<4>(6);
  const Vec3 w = x.segment<3>(10);
  Vector xd(13);
  xd.segment<3>(0) = quat_to_rot(q) * v;
  xd.segment<6>(3) = Vector::Zero(6);
  const Vector a = accel_(x, u);
  xd.segment<3>(3) = a.head<3>();
  xd.segment<4>(6) = 0.5 * omega_matrix(w) * q;
  xd.segment<3>(10) = a.tail<3>();
  return xd;
}

void LoadModel::deriv_jacobians(const Vector& x, const Vector& u, Matrix& A, Matrix& B) const {
  const Vec3 v = x.segment<3>(3);
  const Vec4 q = x.segment<4>(6);
  const Vec3 w = x.segment<3>(10);
  A = Matrix::Zero(13, 13);
  B = Matrix::Zero(13, 6);
  A.block<3, 3>(0, 3) = quat_to_rot(q);
  A.block<3, 4>(0, 6) = d_rot_times(q, v);
  Matrix ax, au;
  accel_.jacobians(x, u, ax, au);
  A.block(3, 0, 3, 13) = ax.topRows(3);
  A.block(10, 0, 3, 13) = ax.bottomRows(3);
  B.block(3, 0, 3, 6) = au.topRows(3);
  B.block(10, 0, 3, 6) = au.bottomRows(3);
  A.block<4, 4>(6, 6) = 0.5 * omega_matrix(w);
  A.block<4, 3>(6, 10) = 0.5 * omega_times_jacobian(q);
}

Vector LoadModel::step(const Vector& x, const Vector& u, const Vector&) const {
  auto f = [this](const Vector& s, const Vector& c) { return deriv(s, c); };
  auto df = [this](const Vector& s, const Vector& c, Matrix& A, Matrix& B) { deriv_jacobians(s, c, A, B); };
  return rk4(f, df, x, u, dt_, 6, 4, nullptr, nullptr);
}

void LoadModel::jacobians(const Vector& x, const Vector& u, const Vector&, Matrix& fx, Matrix& fu) const {
  auto f = [this](const Vector& s, const Vector& c) { return deriv(s, c); };
  auto df = [this](const Vector& s, const Vector& c, Matrix& A, Matrix& B) { deriv_jacobians(s, c, A, B); };
  rk4(f, df, x, u, dt_, 6, 4, &fx, &fu);
}

CableModel::CableModel(double dt) : dt_(dt) {}

Vector CableModel::deriv(const Vector& x, const Vector& u) const {
  const Vec3 d = x.segment<3>(0);
  const Vec3 w = x.segment<3>(3);
  Vector xd(8);
  xd.segment<3>(0) = w.cross(d);
  xd.segment<3>(3) = u.head<3>();
  xd(6) = x(7);
  xd(7) = u(3);
  return xd;
}

void CableModel::deriv_jacobians(const Vector& x, const Vector&, Matrix& A, Matrix& B) const {
  const Vec3 d = x.segment<3>(0);
  const Vec3 w = x.segment<3>(3);
  A = Matrix::Zero(8, 8);
  B = Matrix::Zero(8, 4);
  A.block<3, 3>(0, 0) = skew(w);
  A.block<3, 3>(0, 3) = -skew(d);
  A(6, 7) = 1.0;
  B.block<3, 3>(3, 0).setIdentity();
  B(7, 3) = 1.0;
}

Vector CableModel::step(const Vector& x, const Vector& u, const Vector&) const {
  auto f = [this](const Vector& s, const Vector& c) { return deriv(s, c); };
  auto df = [this](const Vector& s, const Vector& c, Matrix& A, Matrix& B) { deriv_jacobians(s, c, A, B); };
  return rk4(f, df, x, u, dt_, 0, 3, nullptr, nullptr);
}

void CableModel::jacobians(const Vector& x, const Vector& u, const Vector&, Matrix& fx, Matrix& fu) const {
  auto f = [this](const Vector& s, const Vector& c) { return deriv(s, c); };
  auto df = [this](const Vector& s, const Vector& c, Matrix& A, Matrix& B) { deriv_jacobians(s, c, A, B); };
  rk4(f, df, x, u, dt_, 0, 3, &fx, &fu);
}

}  // namespace l2c
