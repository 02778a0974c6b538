#include "wbmm/se3.hpp"

#include <cmath>

namespace wbmm {

PoseSE3 PoseSE3::from_rpy(const Vec3& translation, const Vec3& rpy) {
  PoseSE3 p;
  p.rotation = rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
  p.translation = translation;
  return p;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  PoseSE3 out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

PoseSE3 inverse(const PoseSE3& p) {
  PoseSE3 out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Vec3 transform_point(const PoseSE3& p, const Vec3& x) {
  return p.rotation * x + p.translation;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

Mat3 rotation_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    return Mat3::Identity() + skew(rotvec);
  }
  const Vec3 axis = rotvec / angle;
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Vec3 rotation_log(const Mat3& R) {
  const double trace = R.trace();
  const double cos_angle = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
  const double angle = std::acos(cos_angle);

  if (angle < 1e-7) {
    // First-order: R ~ I + skew(w).
    return 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }

  if (angle > M_PI - 1e-5) {
    // Near pi the skew part of R degenerates; recover the axis from the
    // symmetric part, R ~ 2 aa^T - I. The pivot is the largest diagonal
    // entry (lowest index wins ties) and carries positive sign.
    int k = 0;
    for (int i = 1; i < 3; ++i) {
      if (R(i, i) > R(k, k)) k = i;
    }
    Vec3 axis;
    axis[k] = std::sqrt(std::max(0.0, (R(k, k) + 1.0) * 0.5));
    for (int i = 0; i < 3; ++i) {
      if (i != k) axis[i] = (R(i, k) + R(k, i)) / (4.0 * axis[k]);
    }
    axis.normalize();
    // Strictly below pi the skew part still fixes the overall sign.
    const Vec3 sin_part(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (sin_part.norm() > 1e-9 && sin_part.dot(axis) < 0.0) axis = -axis;
    return axis * angle;
  }

  const double scale = angle / (2.0 * std::sin(angle));
  return scale * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
}

Twist pose_error_twist(const PoseSE3& current, const PoseSE3& goal) {
  Twist err;
  err.head<3>() = goal.translation - current.translation;
  err.tail<3>() = rotation_log(goal.rotation * current.rotation.transpose());
  return err;
}

bool is_valid_rotation(const Mat3& R, double tol) {
  const Mat3 should_be_identity = R.transpose() * R - Mat3::Identity();
  return should_be_identity.cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

double wrap_angle(double theta) {
  theta = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (theta <= 0.0) theta += 2.0 * M_PI;
  return theta - M_PI;
}

}  // namespace wbmm
