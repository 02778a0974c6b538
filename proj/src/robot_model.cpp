#include "wbmm/robot_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace wbmm {

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

PoseSE3 pose_from(const json& j) {
  Vec3 t = Vec3::Zero(), rpy = Vec3::Zero();
  if (j.contains("translation")) t = vec3_from(j["translation"]);
  if (j.contains("rpy")) rpy = vec3_from(j["rpy"]);
  return PoseSE3::from_rpy(t, rpy);
}

}  // namespace

Eigen::VectorXd RobotModel::velocity_limits() const {
  Eigen::VectorXd v(dof());
  v[0] = base.vel_xy;
  v[1] = base.vel_xy;
  v[2] = base.vel_theta;
  for (int j = 0; j < arm_dof(); ++j) v[3 + j] = joints[j].vel_limit;
  return v;
}

void RobotModel::validate() const {
  if (joints.empty()) {
    throw std::invalid_argument("robot model needs at least one arm joint");
  }
  for (size_t i = 0; i < joints.size(); ++i) {
    const JointDesc& jd = joints[i];
    if (std::abs(jd.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("joint " + std::to_string(i) + ": axis is not unit norm");
    }
    if (!(jd.lower < jd.upper)) {
      throw std::invalid_argument("joint " + std::to_string(i) + ": lower limit must be < upper");
    }
    if (jd.vel_limit <= 0.0) {
      throw std::invalid_argument("joint " + std::to_string(i) + ": velocity limit must be positive");
    }
    if (!is_valid_rotation(jd.offset.rotation)) {
      throw std::invalid_argument("joint " + std::to_string(i) + ": offset rotation is not orthonormal");
    }
  }
  if (base.vel_xy <= 0.0 || base.vel_theta <= 0.0) {
    throw std::invalid_argument("base velocity limits must be positive");
  }
}

RobotModel load_robot_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open robot model file: " + path);
  }
  json j;
  in >> j;

  RobotModel model;
  for (const json& jj : j.at("joints")) {
    JointDesc jd;
    jd.axis = vec3_from(jj.at("axis"));
    jd.offset = pose_from(jj.at("offset"));
    const json& lim = jj.at("limits");
    jd.lower = lim.at(0).get<double>();
    jd.upper = lim.at(1).get<double>();
    jd.vel_limit = jj.at("vel_limit").get<double>();
    model.joints.push_back(jd);
  }
  const json& base = j.at("base");
  model.base.vel_xy = base.at("vel_limit_xy").get<double>();
  model.base.vel_theta = base.at("vel_limit_theta").get<double>();
  model.mount_offset = pose_from(j.at("mount_offset"));
  model.ee_offset = pose_from(j.at("ee_offset"));
  model.validate();
  return model;
}

Eigen::VectorXd JointState::stacked() const {
  Eigen::VectorXd q(3 + arm.size());
  q[0] = x;
  q[1] = y;
  q[2] = theta;
  q.tail(arm.size()) = arm;
  return q;
}

JointState JointState::from_stacked(const Eigen::VectorXd& q) {
  if (q.size() < 3) {
    throw std::invalid_argument("stacked state must have at least 3 coordinates");
  }
  JointState s;
  s.x = q[0];
  s.y = q[1];
  s.theta = wrap_angle(q[2]);
  s.arm = q.tail(q.size() - 3);
  return s;
}

PoseSE3 base_pose(const JointState& q) {
  PoseSE3 p;
  p.rotation = rot_z(q.theta);
  p.translation = Vec3(q.x, q.y, 0.0);
  return p;
}

PoseSE3 forward_kinematics(const RobotModel& model, const JointState& q) {
  if (q.arm.size() != model.arm_dof()) {
    throw std::invalid_argument("joint state dimension does not match model");
  }
  PoseSE3 t = compose(base_pose(q), model.mount_offset);
  for (int j = 0; j < model.arm_dof(); ++j) {
    PoseSE3 joint_rot;
    joint_rot.rotation = rotation_exp(model.joints[j].axis * q.arm[j]);
    t = compose(compose(t, model.joints[j].offset), joint_rot);
  }
  return compose(t, model.ee_offset);
}

JacobianMatrix whole_body_jacobian(const RobotModel& model, const JointState& q) {
  if (q.arm.size() != model.arm_dof()) {
    throw std::invalid_argument("joint state dimension does not match model");
  }
  const int n = model.dof();
  JacobianMatrix jac(6, n);
  jac.setZero();

  // Walk the chain once, recording each joint's world axis and origin.
  PoseSE3 t = compose(base_pose(q), model.mount_offset);
  std::vector<Vec3> axes(model.arm_dof());
  std::vector<Vec3> origins(model.arm_dof());
  for (int j = 0; j < model.arm_dof(); ++j) {
    t = compose(t, model.joints[j].offset);
    axes[j] = t.rotation * model.joints[j].axis;
    origins[j] = t.translation;
    PoseSE3 joint_rot;
    joint_rot.rotation = rotation_exp(model.joints[j].axis * q.arm[j]);
    t = compose(t, joint_rot);
  }
  const Vec3 p_ee = compose(t, model.ee_offset).translation;

  // Base: x and y translate directly; theta spins about world z through the
  // base origin (vertical axis, so the base height plays no role).
  jac(0, 0) = 1.0;
  jac(1, 1) = 1.0;
  const Vec3 ez = Vec3::UnitZ();
  jac.block<3, 1>(0, 2) = ez.cross(p_ee - Vec3(q.x, q.y, 0.0));
  jac.block<3, 1>(3, 2) = ez;

  for (int j = 0; j < model.arm_dof(); ++j) {
    jac.block<3, 1>(0, 3 + j) = axes[j].cross(p_ee - origins[j]);
    jac.block<3, 1>(3, 3 + j) = axes[j];
  }
  return jac;
}

JacobianMatrix numeric_jacobian(const RobotModel& model, const JointState& q, double h) {
  if (h <= 0.0) {
    throw std::invalid_argument("finite-difference step must be positive");
  }
  const int n = model.dof();
  JacobianMatrix jac(6, n);
  Eigen::VectorXd q0 = q.stacked();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd qp = q0, qm = q0;
    qp[i] += h;
    qm[i] -= h;
    // Bypass theta wrapping: the wrap is a 2*pi jump FK is invariant to, but
    // from_stacked would also re-wrap boundary values; build states directly.
    JointState sp{qp[0], qp[1], qp[2], qp.tail(n - 3)};
    JointState sm{qm[0], qm[1], qm[2], qm.tail(n - 3)};
    const PoseSE3 fp = forward_kinematics(model, sp);
    const PoseSE3 fm = forward_kinematics(model, sm);
    jac.block<3, 1>(0, i) = (fp.translation - fm.translation) / (2.0 * h);
    jac.block<3, 1>(3, i) = rotation_log(fp.rotation * fm.rotation.transpose()) / (2.0 * h);
  }
  return jac;
}

RobotModel default_surrogate_model() {
  RobotModel model;
  const Vec3 z = Vec3::UnitZ();
  const Vec3 y = Vec3::UnitY();
  const double link[7] = {0.15, 0.10, 0.20, 0.10, 0.20, 0.10, 0.05};
  const Vec3 axis[7] = {z, y, z, y, z, y, z};
  for (int j = 0; j < 7; ++j) {
    JointDesc jd;
    jd.offset = PoseSE3::from_rpy(Vec3(0, 0, link[j]), Vec3::Zero());
    jd.axis = axis[j];
    jd.lower = -2.8;
    jd.upper = 2.8;
    jd.vel_limit = 2.0;
    model.joints.push_back(jd);
  }
  model.mount_offset = PoseSE3::from_rpy(Vec3(0.2, 0.0, 0.4), Vec3::Zero());
  model.ee_offset = PoseSE3::from_rpy(Vec3(0, 0, 0.10), Vec3::Zero());
  model.base = BaseLimits{0.6, 1.0};
  return model;
}

}  // namespace wbmm
