#pragma once

#include <Eigen/Dense>

namespace wbmm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Twist = Eigen::Matrix<double, 6, 1>;  // (v; w), world frame

/// Rigid transform: x_world = rotation * x_local + translation.
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_rpy(const Vec3& translation, const Vec3& rpy);
};

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 inverse(const PoseSE3& p);
Vec3 transform_point(const PoseSE3& p, const Vec3& x);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

Mat3 skew(const Vec3& w);

/// Rotation about a unit axis by `angle` (Rodrigues formula).
Mat3 rotation_exp(const Vec3& rotvec);

/// Rotation-vector form of R (unit axis times angle, angle in [0, pi]).
/// At angle == pi the sign of the axis is fixed deterministically from the
/// largest diagonal entry of R.
Vec3 rotation_log(const Mat3& R);

/// World-frame error twist between two poses: linear part is
/// goal.translation - current.translation, angular part is
/// rotation_log(goal.rotation * current.rotation^T).
/// Zero iff the poses coincide.
Twist pose_error_twist(const PoseSE3& current, const PoseSE3& goal);

bool is_valid_rotation(const Mat3& R, double tol = 1e-9);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

}  // namespace wbmm
