#include "l2c/rotation.hpp"

namespace l2c {

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0, -a(2), a(1), a(2), 0, -a(0), -a(1), a(0), 0;
  return s;
}

Mat3 quat_to_rot(const Vec4& q) {
  const double w = q(0);
  const Vec3 e = q.tail<3>();
  return (w * w - e.squaredNorm()) * Mat3::Identity() + 2.0 * e * e.transpose() + 2.0 * w * skew(e);
}

Mat34 d_rot_times(const Vec4& q, const Vec3& v) {
  const double w = q(0);
  const Vec3 e = q.tail<3>();
  Mat34 J;
  J.col(0) = 2.0 * w * v + 2.0 * e.cross(v);
  J.rightCols<3>() = -2.0 * v * e.transpose() + 2.0 * e.dot(v) * Mat3::Identity() + 2.0 * e * v.transpose() -
                     2.0 * w * skew(v);
  return J;
}

Mat34 d_rot_transpose_times(const Vec4& q, const Vec3& v) {
  const double w = q(0);
  const Vec3 e = q.tail<3>();
  Mat34 J;
  J.col(0) = 2.0 * w * v - 2.0 * e.cross(v);
  J.rightCols<3>() = -2.0 * v * e.transpose() + 2.0 * e.dot(v) * Mat3::Identity() + 2.0 * e * v.transpose() +
                     2.0 * w * skew(v);
  return J;
}

Eigen::Matrix4d omega_matrix(const Vec3& w) {
  Eigen::Matrix4d O;
  O(0, 0) = 0.0;
  O.block<1, 3>(0, 1) = -w.transpose();
  O.block<3, 1>(1, 0) = w;
  O.block<3, 3>(1, 1) = -skew(w);
  return O;
}

Eigen::Matrix<double, 4, 3> omega_times_jacobian(const Vec4& q) {
  Eigen::Matrix<double, 4, 3> J;
  J.row(0) = -q.tail<3>().transpose();
  J.bottomRows<3>() = q(0) * Mat3::Identity() + skew(q.tail<3>());
  return J;
}

Vec4 quat_from_axis_angle(const Vec3& axis, double angle) {
  Vec4 q;
  q(0) = std::cos(angle / 2);
  q.tail<3>() = std::sin(angle / 2) * axis.normalized();
  return q;
}

}  // namespace l2c
