#include "l2c/multilift_constraints.hpp"

#include <string>

namespace l2c {

namespace {

std::vector<int> range(int start, int len) {
  std::vector<int> v(len);
  for (int i = 0; i < len; ++i) v[i] = start + i;
  return v;
}

void append(std::vector<int>& a, const std::vector<int>& b) { a.insert(a.end(), b.begin(), b.end()); }

// d/dw of w x (w x r).
Mat3 d_double_cross(const Vec3& w, const Vec3& r) {
  return w.dot(r) * Mat3::Identity() + w * r.transpose() - 2.0 * r * w.transpose();
}

// Hessian of e^T R(q) b over q; R(q) b is quadratic in q, so this is constant.
Eigen::Matrix4d rot_quadratic_hessian(const Vec3& e, const Vec3& b) {
  Eigen::Matrix4d H;
  for (int j = 0; j < 4; ++j) H.col(j) = d_rot_times(Vec4::Unit(j), b).transpose() * e;
  return H;
}

}  // namespace

CablePositionMap::CablePositionMap(const MultiliftConfig& cfg, int cable, int load_x_offset, int cable_x_offset)
    : r_(cfg.r[cable]), l_(cfg.l[cable]) {
  idx_ = range(load_x_offset, 3);
  append(idx_, range(load_x_offset + 6, 4));
  append(idx_, range(cable_x_offset, 3));
}

Vec3 CablePositionMap::eval(const Vector& w, Matrix* J) const {
  const Vec4 q = w.segment<4>(3);
  const Vec3 d = w.segment<3>(7);
  if (J) {
    J->setZero(3, 10);
    J->leftCols(3).setIdentity();
    J->middleCols(3, 4) = d_rot_times(q, r_);
    J->rightCols(3) = l_ * Mat3::Identity();
  }
  return w.head<3>() + quat_to_rot(q) * r_ + l_ * d;
}

Matrix CablePositionMap::weighted_hessian(const Vector&, const Vec3& e) const {
  Matrix H = Matrix::Zero(10, 10);
  H.block<4, 4>(3, 3) = rot_quadratic_hessian(e, r_);
  return H;
}

Matrix tension_map(const MultiliftConfig& cfg, int cable) {
  const Matrix P = wrench_map(cfg);
  Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeFullV);
  const Matrix N = svd.matrixV().rightCols(3 * cfg.n - 6);
  const Matrix Pp = P.transpose() * (P * P.transpose()).inverse();
  Matrix A(3, 6 + N.cols());
  A << Pp.middleRows(3 * cable, 3), N.middleRows(3 * cable, 3);
  return A;
}

TensionPositionMap::TensionPositionMap(const MultiliftConfig& cfg, int cable, int load_x_offset, int load_u_offset,
                                       int aux_offset)
    : r_(cfg.r[cable]), l_(cfg.l[cable]), A_(tension_map(cfg, cable)) {
  idx_ = range(load_x_offset, 3);
  append(idx_, range(load_x_offset + 6, 4));
  append(idx_, range(load_u_offset, 6));
  append(idx_, range(aux_offset, static_cast<int>(A_.cols()) - 6));
}

Vec3 TensionPositionMap::eval(const Vector& w, Matrix* J) const {
  const Vec4 q = w.segment<4>(3);
  const Vec3 t = A_ * w.tail(A_.cols());
  const double tn = t.norm();
  if (tn < 1e-12) throw DomainError("quadrotor position undefined for zero tension");
  const Vec3 th = t / tn;
  const Vec3 body = r_ + l_ * th;
  const Mat3 R = quat_to_rot(q);
  if (J) {
    J->setZero(3, w.size());
    J->leftCols(3).setIdentity();
    J->middleCols(3, 4) = d_rot_times(q, body);
    const Mat3 dth = (Mat3::Identity() - th * th.transpose()) / tn;
    J->rightCols(A_.cols()) = l_ * R * dth * A_;
  }
  return w.head<3>() + R * body;
}

Matrix TensionPositionMap::weighted_hessian(const Vector& w, const Vec3& e) const {
  const Vec4 q = w.segment<4>(3);
  const Vector z = w.tail(A_.cols());
  const Vec3 t = A_ * z;
  const double tn = t.norm();
  const Vec3 th = t / tn;
  const Mat3 R = quat_to_rot(q);
  const int nz = static_cast<int>(A_.cols());
  Matrix H = Matrix::Zero(w.size(), w.size());
  H.block<4, 4>(3, 3) = rot_quadratic_hessian(e, r_ + l_ * th);
  // Cross term: d/dz of e^T dR/dq_j b(z), linear in db/dz.
  const Matrix Jb = l_ * (Mat3::Identity() - th * th.transpose()) / tn * A_;
  Matrix C(4, nz);
  for (int c = 0; c < nz; ++c) C.col(c) = d_rot_times(q, Jb.col(c)).transpose() * e;
  H.block(3, 7, 4, nz) = C;
  H.block(7, 3, nz, 4) = C.transpose();
  // Hessian of u^T t / |t| with u = l R^T e.
  const Vec3 u = l_ * R.transpose() * e;
  const double ut = u.dot(t), t3 = tn * tn * tn;
  const Mat3 Hs = -(u * t.transpose() + t * u.transpose() + ut * Mat3::Identity()) / t3 +
                  3.0 * ut * t * t.transpose() / (t3 * tn * tn);
  H.block(7, 7, nz, nz) = A_.transpose() * Hs * A_;
  return H;
}

QuadSeparation::QuadSeparation(QuadPositionPtr a, QuadPositionPtr b, double d_min, std::string name)
    : StageFunction(
          [&] {
            std::vector<int> v = a->indices();
            append(v, b->indices());
            return v;
          }(),
          std::move(name)),
      a_(std::move(a)),
      b_(std::move(b)),
      na_(static_cast<int>(a_->indices().size())),
      d2_(d_min * d_min) {}

double QuadSeparation::value(const Vector& w, const Vector&) const {
  const Vec3 pa = a_->eval(w.head(na_), nullptr);
  const Vec3 pb = b_->eval(w.tail(w.size() - na_), nullptr);
  return d2_ - (pa - pb).squaredNorm();
}

Vector QuadSeparation::gradient(const Vector& w, const Vector&) const {
  Matrix Ja, Jb;
  const Vec3 pa = a_->eval(w.head(na_), &Ja);
  const Vec3 pb = b_->eval(w.tail(w.size() - na_), &Jb);
  const Vec3 e = pa - pb;
  Vector g(w.size());
  g.head(na_) = -2.0 * Ja.transpose() * e;
  g.tail(w.size() - na_) = 2.0 * Jb.transpose() * e;
  return g;
}

Matrix QuadSeparation::hessian(const Vector& w, const Vector&) const {
  const int nb = static_cast<int>(w.size()) - na_;
  Matrix Ja, Jb;
  const Vector wa = w.head(na_), wb = w.tail(nb);
  const Vec3 e = a_->eval(wa, &Ja) - b_->eval(wb, &Jb);
  Matrix J(3, w.size());
  J << Ja, -Jb;
  Matrix H = -2.0 * J.transpose() * J;
  H.topLeftCorner(na_, na_) -= 2.0 * a_->weighted_hessian(wa, e);
  H.bottomRightCorner(nb, nb) += 2.0 * b_->weighted_hessian(wb, e);
  return H;
}

QuadObstacle::QuadObstacle(QuadPositionPtr a, const Vec3& p_o, double d_min, std::string name)
    : StageFunction(a->indices(), std::move(name)), a_(std::move(a)), po_(p_o), d2_(d_min * d_min) {}

double QuadObstacle::value(const Vector& w, const Vector&) const {
  return d2_ - (a_->eval(w, nullptr) - po_).squaredNorm();
}

Vector QuadObstacle::gradient(const Vector& w, const Vector&) const {
  Matrix J;
  const Vec3 p = a_->eval(w, &J);
  return -2.0 * J.transpose() * (p - po_);
}

Matrix QuadObstacle::hessian(const Vector& w, const Vector&) const {
  Matrix J;
  const Vec3 e = a_->eval(w, &J) - po_;
  return -2.0 * (J.transpose() * J + a_->weighted_hessian(w, e));
}

ThrustLimit::ThrustLimit(const MultiliftConfig& cfg, int cable, const StageLayout& layout, int cable_agent)
    : StageFunction(
          [&] {
            std::vector<int> v = range(layout.x_offset[0], 13);
            append(v, range(layout.u_offset[0], 6));
            append(v, range(layout.x_offset[cable_agent], 8));
            append(v, range(layout.u_offset[cable_agent], 4));
            return v;
          }(),
          "thrust_" + std::to_string(cable)),
      accel_(cfg),
      r_(cfg.r[cable]),
      l_(cfg.l[cable]),
      m_(cfg.m_q[cable]),
      g_(cfg.g),
      f2_(cfg.f_max * cfg.f_max) {}

Vec3 ThrustLimit::thrust(const Vector& w, Matrix* J) const {
  const Vector xl = w.head(13), ul = w.segment(13, 6);
  const Vec3 v = xl.segment<3>(3), om = xl.segment<3>(10);
  const Vec4 q = xl.segment<4>(6);
  const Vec3 d = w.segment<3>(19), oc = w.segment<3>(22), gam = w.segment<3>(27);
  const double t = w(25);
  const Vector a = accel_(xl, ul);
  const Vec3 av = a.head<3>(), aw = a.tail<3>();
  const Vec3 s = av + om.cross(v) + aw.cross(r_) + om.cross(om.cross(r_));
  const Mat3 R = quat_to_rot(q);
  const Vec3 c = l_ * (gam.cross(d) + oc.cross(oc.cross(d)));
  const Vec3 f = m_ * (R * s + c + Vec3(0, 0, g_)) + t * d;
  if (J) {
    Matrix ax, au;
    accel_.jacobians(xl, ul, ax, au);
    Matrix ds_dx = ax.topRows(3) - skew(r_) * ax.bottomRows(3);
    ds_dx.middleCols(3, 3) += skew(om);
    ds_dx.middleCols(10, 3) += -skew(v) + d_double_cross(om, r_);
    const Matrix ds_du = au.topRows(3) - skew(r_) * au.bottomRows(3);
    J->setZero(3, 31);
    J->leftCols(13) = m_ * R * ds_dx;
    J->middleCols(6, 4) += m_ * d_rot_times(q, s);
    J->middleCols(13, 6) = m_ * R * ds_du;
    J->middleCols(19, 3) = m_ * l_ * (skew(gam) + skew(oc) * skew(oc)) + t * Mat3::Identity();
    J->middleCols(22, 3) = m_ * l_ * d_double_cross(oc, d);
    J->col(25) = d;
    J->middleCols(27, 3) = -m_ * l_ * skew(d);
  }
  return f;
}

double ThrustLimit::value(const Vector& w, const Vector&) const { return thrust(w, nullptr).squaredNorm() - f2_; }

Vector ThrustLimit::gradient(const Vector& w, const Vector&) const {
  Matrix J;
  const Vec3 f = thrust(w, &J);
  return 2.0 * J.transpose() * f;
}

Matrix ThrustLimit::hessian(const Vector& w, const Vector&) const {
  Matrix J;
  const Vec3 f = thrust(w, &J);
  Matrix H = 2.0 * J.transpose() * J;
  // Second-order part sum_j f_j d2f_j by central differences of the analytic Jacobian.
  // Gauss-Newton alone stalls Newton once the limit is nearly active.
  Matrix Jp, Jm;
  for (int k = 0; k < w.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(w(k)));
    Vector wp = w, wm = w;
    wp(k) += h;
    wm(k) -= h;
    thrust(wp, &Jp);
    thrust(wm, &Jm);
    H.col(k) += (Jp - Jm).transpose() * f / h;
  }
  return 0.5 * (H + H.transpose());
}

WrenchConsistency::WrenchConsistency(const MultiliftConfig& cfg, const StageLayout& layout, double kappa)
    : StageFunction(
          [&] {
            std::vector<int> v = range(layout.x_offset[0] + 6, 4);
            append(v, range(layout.u_offset[0], 6));
            for (int i = 0; i < cfg.n; ++i) {
              append(v, range(layout.x_offset[i + 1], 3));
              v.push_back(layout.x_offset[i + 1] + 6);
            }
            return v;
          }(),
          "wrench"),
      kappa_(kappa) {
  for (int i = 0; i < cfg.n; ++i) {
    Matrix B(6, 3);
    B << Mat3::Identity(), skew(cfg.r[i]);
    Pi_.push_back(B);
  }
}

Vector WrenchConsistency::residual(const Vector& w, Matrix* J) const {
  const Vec4 q = w.head<4>();
  const Mat3 Rt = quat_to_rot(q).transpose();
  Vector h = w.segment(4, 6);
  if (J) {
    J->setZero(6, w.size());
    J->middleCols(4, 6).setIdentity();
  }
  for (std::size_t i = 0; i < Pi_.size(); ++i) {
    const int o = 10 + 4 * static_cast<int>(i);
    const Vec3 d = w.segment<3>(o);
    const double t = w(o + 3);
    h -= Pi_[i] * (Rt * (t * d));
    if (J) {
      J->leftCols(4) -= Pi_[i] * d_rot_transpose_times(q, t * d);
      J->middleCols(o, 3) = -t * Pi_[i] * Rt;
      J->col(o + 3) = -Pi_[i] * (Rt * d);
    }
  }
  return h;
}

double WrenchConsistency::value(const Vector& w, const Vector&) const {
  return 0.5 * kappa_ * residual(w, nullptr).squaredNorm();
}

Vector WrenchConsistency::gradient(const Vector& w, const Vector&) const {
  Matrix J;
  const Vector h = residual(w, &J);
  return kappa_ * J.transpose() * h;
}

Matrix WrenchConsistency::hessian(const Vector& w, const Vector&) const {
  Matrix J;
  const Vector h = residual(w, &J);
  Matrix H = J.transpose() * J;
  // Exact second-order part: h^T h'' from -y_i^T R^T (t_i d_i), y_i = P_i^T h.
  const Vec4 q = w.head<4>();
  const Mat3 R = quat_to_rot(q);
  for (std::size_t i = 0; i < Pi_.size(); ++i) {
    const int o = 10 + 4 * static_cast<int>(i);
    const Vec3 d = w.segment<3>(o);
    const double t = w(o + 3);
    const Vec3 y = Pi_[i].transpose() * h;
    const Mat34 Dy = d_rot_times(q, y);
    H.block<4, 4>(0, 0) -= rot_quadratic_hessian(t * d, y);
    H.block<4, 3>(0, o) -= t * Dy.transpose();
    H.block<4, 1>(0, o + 3) -= Dy.transpose() * d;
    H.block<3, 1>(o, o + 3) -= R * y;
  }
  for (std::size_t i = 0; i < Pi_.size(); ++i) {
    const int o = 10 + 4 * static_cast<int>(i);
    H.block(o, 0, 4, 4) = H.block(0, o, 4, 4).transpose();
    H.block<1, 3>(o + 3, o) = H.block<3, 1>(o, o + 3).transpose();
  }
  return kappa_ * H;
}

TensionNormBound::TensionNormBound(std::vector<int> indices, Matrix A, double t_max, std::string name)
    : StageFunction(std::move(indices), std::move(name)), A_(std::move(A)), t2_(t_max * t_max) {}

double TensionNormBound::value(const Vector& w, const Vector&) const { return (A_ * w).squaredNorm() - t2_; }

Vector TensionNormBound::gradient(const Vector& w, const Vector&) const { return 2.0 * A_.transpose() * (A_ * w); }

Matrix TensionNormBound::hessian(const Vector&, const Vector&) const { return 2.0 * A_.transpose() * A_; }

TensionTrackingCost::TensionTrackingCost(std::vector<int> indices, Matrix A, Vec3 t_ref, int rt_offset)
    : StageFunction(std::move(indices), "tension_tracking"), A_(std::move(A)), t_ref_(std::move(t_ref)), rt_(rt_offset) {}

Vector TensionTrackingCost::weights(const Vector& theta) const {
  const int n = static_cast<int>(A_.rows()) / 3;
  return theta.segment<3>(rt_).replicate(n, 1);
}

double TensionTrackingCost::value(const Vector& w, const Vector& theta) const {
  const Vector e = A_ * w - t_ref_.replicate(A_.rows() / 3, 1);
  return 0.5 * e.dot(weights(theta).cwiseProduct(e));
}

Vector TensionTrackingCost::gradient(const Vector& w, const Vector& theta) const {
  const Vector e = A_ * w - t_ref_.replicate(A_.rows() / 3, 1);
  return A_.transpose() * weights(theta).cwiseProduct(e);
}

Matrix TensionTrackingCost::hessian(const Vector&, const Vector& theta) const {
  return A_.transpose() * weights(theta).asDiagonal() * A_;
}

Matrix TensionTrackingCost::mixed_theta(const Vector& w, const Vector& theta) const {
  const Vector e = A_ * w - t_ref_.replicate(A_.rows() / 3, 1);
  Matrix M = Matrix::Zero(w.size(), theta.size());
  for (int j = 0; j < 3; ++j) {
    Vector sel = Vector::Zero(e.size());
    for (int i = j; i < e.size(); i += 3) sel(i) = e(i);
    M.col(rt_ + j) = A_.transpose() * sel;
  }
  return M;
}

}  // namespace l2c
