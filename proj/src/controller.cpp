#include "wbmm/controller.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wbmm {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::baseline_slack: return "baseline_slack";
    case Variant::elim_slacks: return "elim_slacks";
    case Variant::baseline_icn: return "baseline_icn";
    case Variant::rem_qp: return "rem_qp";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "baseline_slack") return Variant::baseline_slack;
  if (name == "elim_slacks") return Variant::elim_slacks;
  if (name == "baseline_icn") return Variant::baseline_icn;
  if (name == "rem_qp") return Variant::rem_qp;
  throw std::invalid_argument("unknown controller variant: " + name);
}

bool variant_uses_icn(Variant v) {
  return v == Variant::baseline_icn || v == Variant::rem_qp;
}

bool variant_uses_slack_form(Variant v) {
  return v == Variant::baseline_slack || v == Variant::baseline_icn;
}

void ControllerConfig::validate() const {
  if (uses_icn()) {
    if (!(icn_weight > 0.0)) {
      throw std::invalid_argument("ICN variants require icn_weight > 0");
    }
  } else if (icn_weight != 0.0) {
    throw std::invalid_argument("non-ICN variants require icn_weight == 0");
  }
  if (!(damper.stop < damper.influence)) {
    throw std::invalid_argument("damper stop distance must be below influence distance");
  }
  if (damper.stop < 0.0 || damper.gain < 0.0 || servo_gain < 0.0 || icn_fd_step <= 0.0) {
    throw std::invalid_argument("controller gains must be non-negative, fd step positive");
  }
  if (q_qq_base <= 0.0 || q_qq_arm <= 0.0 || (q_dd_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("controller weights must be positive");
  }
}

ControllerConfig ControllerConfig::with_variant(Variant v) const {
  ControllerConfig out = *this;
  out.variant = v;
  if (!variant_uses_icn(v)) {
    out.icn_weight = 0.0;
  } else if (out.icn_weight <= 0.0) {
    out.icn_weight = 1.0;
  }
  return out;
}

Eigen::MatrixXd ControllerConfig::q_qq(int n) const {
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, q_qq_arm);
  diag.head(3).setConstant(q_qq_base);
  return diag.asDiagonal();
}

Twist servo_twist(const PoseSE3& current, const PoseSE3& goal, const ControllerConfig& cfg) {
  Twist nu = cfg.servo_gain * pose_error_twist(current, goal);
  const double vn = nu.head<3>().norm();
  if (vn > cfg.twist_clamp.linear) nu.head<3>() *= cfg.twist_clamp.linear / vn;
  const double wn = nu.tail<3>().norm();
  if (wn > cfg.twist_clamp.angular) nu.tail<3>() *= cfg.twist_clamp.angular / wn;
  return nu;
}

double icn(const JacobianMatrix& jac) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double s_max = sigma[0];
  if (s_max <= 0.0) return 0.0;
  return sigma[sigma.size() - 1] / s_max;
}

double icn_at(const RobotModel& model, const JointState& q) {
  return icn(whole_body_jacobian(model, q));
}

Eigen::VectorXd icn_gradient(const RobotModel& model, const JointState& q, double fd_step) {
  if (fd_step <= 0.0) throw std::invalid_argument("fd step must be positive");
  const int n = model.dof();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd q0 = q.stacked();
  for (int i = 2; i < n; ++i) {
    Eigen::VectorXd qp = q0, qm = q0;
    qp[i] += fd_step;
    qm[i] -= fd_step;
    const JointState sp{qp[0], qp[1], qp[2], qp.tail(n - 3)};
    const JointState sm{qm[0], qm[1], qm[2], qm.tail(n - 3)};
    grad[i] = (icn_at(model, sp) - icn_at(model, sm)) / (2.0 * fd_step);
  }
  return grad;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_safety_constraints(
    const RobotModel& model, const JointState& q, const ControllerConfig& cfg) {
  const int n = model.dof();
  const int m = model.arm_dof();
  const Eigen::VectorXd vel = model.velocity_limits();

  std::vector<std::pair<int, double>> rows;  // (signed coordinate, bound)
  rows.reserve(2 * n + 2 * m);
  for (int i = 0; i < n; ++i) {
    rows.emplace_back(i + 1, vel[i]);      // +qd_i <= vel
    rows.emplace_back(-(i + 1), vel[i]);   // -qd_i <= vel
  }
  const double span = cfg.damper.influence - cfg.damper.stop;
  for (int j = 0; j < m; ++j) {
    const int coord = 3 + j;
    const double to_upper = model.joints[j].upper - q.arm[j];
    if (to_upper < cfg.damper.influence) {
      rows.emplace_back(coord + 1, cfg.damper.gain * (to_upper - cfg.damper.stop) / span);
    }
    const double to_lower = q.arm[j] - model.joints[j].lower;
    if (to_lower < cfg.damper.influence) {
      rows.emplace_back(-(coord + 1), cfg.damper.gain * (to_lower - cfg.damper.stop) / span);
    }
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    const int coord = std::abs(rows[r].first) - 1;
    a(static_cast<Eigen::Index>(r), coord) = rows[r].first > 0 ? 1.0 : -1.0;
    b[static_cast<Eigen::Index>(r)] = rows[r].second;
  }
  return {std::move(a), std::move(b)};
}

WholeBodyController::WholeBodyController(RobotModel model, ControllerConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
  model_.validate();
  cfg_.validate();
}

ControlCommand WholeBodyController::compute_control(const JointState& q, const PoseSE3& goal) {
  const int n = model_.dof();
  ControlCommand cmd;
  cmd.qdot = Eigen::VectorXd::Zero(n);

  const JacobianMatrix jac = whole_body_jacobian(model_, q);
  cmd.icn_value = icn(jac);

  SlackQPForm form;
  form.Q_qq = cfg_.q_qq(n);
  form.Q_dd = cfg_.q_dd_diag.asDiagonal();
  form.J = jac;
  form.nu_star = servo_twist(forward_kinematics(model_, q), goal, cfg_);
  std::tie(form.A, form.b) = build_safety_constraints(model_, q, cfg_);

  int icn_evals = 0;
  if (cfg_.uses_icn()) {
    form.c_q = -cfg_.icn_weight * icn_gradient(model_, q, cfg_.icn_fd_step);
    icn_evals = 2 * (n - 2);
  } else {
    form.c_q = Eigen::VectorXd::Zero(n);
  }

  const bool slack_form = variant_uses_slack_form(cfg_.variant);
  const QPProblem problem = slack_form ? slack_qp_problem(form) : reduce_slack_qp(form);
  if (warm_ && warm_->size() != problem.num_vars()) warm_.reset();

  const auto t0 = std::chrono::steady_clock::now();
  const QPSolution sol = solver_.solve(problem, warm_);
  cmd.measured_solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  cmd.qp_status = sol.status;
  cmd.qp_iterations = sol.iterations;
  if (sol.status == QPStatus::optimal) {
    cmd.qdot = sol.x.head(n);
    warm_ = sol.x;
  } else {
    // Stop-safe: an unsolved tick commands zero motion.
    cmd.qdot.setZero();
    warm_.reset();
  }

  const int kkt_dim = problem.num_vars() + problem.num_eq();
  cmd.qp_solve_time = cfg_.latency.qp_time(kkt_dim, sol.iterations);
  cmd.solve_time = cmd.qp_solve_time + cfg_.latency.icn_time(icn_evals);
  return cmd;
}

}  // namespace wbmm
