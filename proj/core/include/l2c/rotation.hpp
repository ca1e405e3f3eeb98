#pragma once

#include <Eigen/Dense>

namespace l2c {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

Mat3 skew(const Vec3& a);

// Quaternions are [w; x; y; z] and map body vectors to the world frame.
// R(q) is the homogeneous quadratic form, so it scales with |q|^2 off the unit sphere.
Mat3 quat_to_rot(const Vec4& q);

/// d(R(q) v)/dq.
Mat34 d_rot_times(const Vec4& q, const Vec3& v);

/// d(R(q)^T v)/dq.
Mat34 d_rot_transpose_times(const Vec4& q, const Vec3& v);

/// Omega(w) with qdot = 1/2 Omega(w) q for body rates w.
Eigen::Matrix4d omega_matrix(const Vec3& w);

/// d(Omega(w) q)/dw.
Eigen::Matrix<double, 4, 3> omega_times_jacobian(const Vec4& q);

Vec4 quat_from_axis_angle(const Vec3& axis, double angle);

}  // namespace l2c
