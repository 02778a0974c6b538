#pragma once

#include <string>
#include <vector>

#include "wbmm/se3.hpp"

namespace wbmm {

using JacobianMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

struct JointDesc {
  PoseSE3 offset;       // fixed transform from the previous frame to this joint frame
  Vec3 axis;            // revolute axis in the joint frame, unit norm
  double lower = -2.8;  // position limits [rad]
  double upper = 2.8;
  double vel_limit = 2.0;  // [rad/s]
};

struct BaseLimits {
  double vel_xy = 0.6;     // per-axis [m/s]
  double vel_theta = 1.0;  // [rad/s]
};

/// Holonomic planar base carrying a serial revolute arm. Generalized
/// coordinates are stacked as q = (x, y, theta, arm...), n = m + 3.
struct RobotModel {
  std::vector<JointDesc> joints;
  BaseLimits base;
  PoseSE3 mount_offset;  // base frame -> arm base frame
  PoseSE3 ee_offset;     // last joint frame -> end-effector frame

  int arm_dof() const { return static_cast<int>(joints.size()); }
  int dof() const { return arm_dof() + 3; }

  /// Per-coordinate velocity limits in stacked order.
  Eigen::VectorXd velocity_limits() const;

  /// Throws std::invalid_argument if any invariant is broken
  /// (m >= 1, unit axes, lower < upper per joint).
  void validate() const;
};

/// Loads a robot model from its JSON description. Schema:
///   joints[]: {axis: [x,y,z], offset: {translation: [3], rpy: [3]},
///              limits: [lo, hi], vel_limit}
///   base: {vel_limit_xy, vel_limit_theta}
///   mount_offset, ee_offset: {translation, rpy}
RobotModel load_robot_model(const std::string& path);

struct JointState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // wrapped to (-pi, pi]
  Eigen::VectorXd arm;

  Eigen::VectorXd stacked() const;
  static JointState from_stacked(const Eigen::VectorXd& q);
};

/// Planar base pose lifted to SE(3): yaw about world z at (x, y, 0).
PoseSE3 base_pose(const JointState& q);

/// World end-effector pose: T_base(x,y,theta) * mount * chain(arm) * ee.
PoseSE3 forward_kinematics(const RobotModel& model, const JointState& q);

/// World-frame geometric Jacobian, 6 x (m+3): rows 0-2 linear, 3-5 angular.
JacobianMatrix whole_body_jacobian(const RobotModel& model, const JointState& q);

/// Central-difference Jacobian with step h; angular rows come from the
/// rotation log of the relative rotation divided by 2h. Test oracle for
/// whole_body_jacobian, kept in the library for the step-consistency checks.
JacobianMatrix numeric_jacobian(const RobotModel& model, const JointState& q, double h);

/// Ships the default 7-DoF surrogate chain used by the benchmark configs
/// (alternating z/y axes, ~1.0 m reach). Handy for tests.
RobotModel default_surrogate_model();

}  // namespace wbmm
