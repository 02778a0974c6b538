#pragma once

#include <optional>
#include <string>
#include <utility>

#include "wbmm/qp.hpp"
#include "wbmm/robot_model.hpp"

namespace wbmm {

enum class Variant { baseline_slack, elim_slacks, baseline_icn, rem_qp };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws on unknown name
bool variant_uses_icn(Variant v);
bool variant_uses_slack_form(Variant v);

struct TwistClamp {
  double linear = 0.5;    // [m/s]
  double angular = 1.0;   // [rad/s]
};

struct DamperParams {
  double influence = 0.9;  // rho_i [rad]
  double stop = 0.1;       // rho_s [rad]
  double gain = 1.0;       // xi
};

/// Deterministic per-tick compute cost of the controller, standing in for the
/// measured solve time of a reference control stack. Keeping it a model (and
/// not a wall clock) is what makes latency-coupled episodes reproducible
/// bit-for-bit. Constants are calibrated so a 22-dim KKT system lands near
/// 20 ms and a 10-dim one near 2 ms.
struct LatencyModel {
  double base_s = 3.0e-4;
  double kkt_cubic_s = 1.85e-6;    // per unit of (n_vars + n_eq)^3
  double per_iteration_s = 4.0e-5;
  double icn_eval_s = 6.0e-4;      // per ICN finite-difference evaluation

  double qp_time(int kkt_dim, int iterations) const {
    return base_s + kkt_cubic_s * static_cast<double>(kkt_dim) * kkt_dim * kkt_dim +
           per_iteration_s * iterations;
  }
  double icn_time(int evaluations) const { return icn_eval_s * evaluations; }
};

struct ControllerConfig {
  Variant variant = Variant::rem_qp;

  // Q_qq = diag(q_qq_base * I_3, q_qq_arm * I_m). The base is kept cheaper
  // than the arm so task translation is carried by the base instead of
  // winding the arm toward its stops over long moves.
  double q_qq_base = 0.01;
  double q_qq_arm = 0.2;
  Eigen::Matrix<double, 6, 1> q_dd_diag = (Eigen::Matrix<double, 6, 1>() << 10, 10, 10, 5, 5, 5).finished();

  double servo_gain = 2.0;  // [1/s]
  TwistClamp twist_clamp;
  double icn_weight = 1.0;   // lambda_ICN; must be 0 for the non-ICN variants
  double icn_fd_step = 1e-5; // [rad]
  DamperParams damper;
  LatencyModel latency;

  bool uses_icn() const { return variant_uses_icn(variant); }

  /// Throws std::invalid_argument when the variant/weight pairing or the
  /// damper geometry is inconsistent.
  void validate() const;

  /// Copy with the variant switched and icn_weight forced consistent.
  ControllerConfig with_variant(Variant v) const;

  Eigen::MatrixXd q_qq(int n) const;
};

struct ControlCommand {
  Eigen::VectorXd qdot;
  double solve_time = 0.0;           // modeled controller latency [s]
  double qp_solve_time = 0.0;        // modeled QP-only share [s]
  double measured_solve_time = 0.0;  // wall clock of the QP solve [s]
  double icn_value = 0.0;
  QPStatus qp_status = QPStatus::optimal;
  int qp_iterations = 0;
};

/// nu_star = servo_gain * pose_error_twist(current, goal), with the linear and
/// angular parts clamped separately in norm (direction preserved).
Twist servo_twist(const PoseSE3& current, const PoseSE3& goal, const ControllerConfig& cfg);

/// Inverse condition number sigma_min / sigma_max of the 6 x n Jacobian,
/// in [0, 1]; 0 when sigma_max == 0.
double icn(const JacobianMatrix& jac);

double icn_at(const RobotModel& model, const JointState& q);

/// Centered finite differences of the ICN over the generalized coordinates.
/// The base x/y components are identically zero (the Jacobian is invariant to
/// base translation) and are skipped rather than evaluated.
Eigen::VectorXd icn_gradient(const RobotModel& model, const JointState& q, double fd_step);

/// Velocity bounds for every coordinate plus velocity-damper rows for arm
/// joints inside the damper influence distance. Row order: per coordinate
/// (+qd_i, then -qd_i), then per arm joint the upper then lower damper row.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_safety_constraints(
    const RobotModel& model, const JointState& q, const ControllerConfig& cfg);

/// One whole-body controller instance: owns the QP solver workspace and the
/// warm-start state, so one instance per simulated robot.
class WholeBodyController {
 public:
  WholeBodyController(RobotModel model, ControllerConfig cfg);

  ControlCommand compute_control(const JointState& q, const PoseSE3& goal);

  const ControllerConfig& config() const { return cfg_; }
  const RobotModel& model() const { return model_; }
  void reset_warm_start() { warm_.reset(); }

 private:
  RobotModel model_;
  ControllerConfig cfg_;
  QPSolver solver_;
  std::optional<Eigen::VectorXd> warm_;
};

}  // namespace wbmm
