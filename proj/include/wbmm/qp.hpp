#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace wbmm {

enum class QPStatus { optimal, infeasible, max_iter };

const char* qp_status_name(QPStatus s);

/// Strictly convex QP: min 1/2 x^T Q x + c^T x  s.t.  A x <= b, E x = d.
/// Construction validates symmetry of Q (1e-10), positive definiteness
/// (tolerance 1e-12) and dimensional consistency; throws std::invalid_argument.
struct QPProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;  // k x n, may have zero rows
  Eigen::VectorXd b;
  Eigen::MatrixXd E;  // p x n, may have zero rows
  Eigen::VectorXd d;

  QPProblem(Eigen::MatrixXd Q_in, Eigen::VectorXd c_in, Eigen::MatrixXd A_in,
            Eigen::VectorXd b_in, Eigen::MatrixXd E_in = Eigen::MatrixXd(),
            Eigen::VectorXd d_in = Eigen::VectorXd());

  int num_vars() const { return static_cast<int>(Q.rows()); }
  int num_ineq() const { return static_cast<int>(A.rows()); }
  int num_eq() const { return static_cast<int>(E.rows()); }
};

struct QPSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // inequality multipliers, >= 0 at optimum
  Eigen::VectorXd mu;      // equality multipliers
  QPStatus status = QPStatus::max_iter;
  int iterations = 0;
  double solve_time = 0.0;  // wall-clock seconds of this solve
  // Farkas-style ray over (inequality, equality) rows when status == infeasible:
  // sum_i certificate_i * row_i == 0 with certificate >= 0 on inequality rows
  // and certificate^T (b; d) < 0.
  Eigen::VectorXd certificate;
};

/// Max-norm KKT residual of (p, s): stationarity, primal feasibility
/// (inequality and equality), dual feasibility, complementarity.
double kkt_residual(const QPProblem& p, const QPSolution& s);

/// Whole-body tracking QP in its slack form,
///   min_{qd, delta} 1/2 qd^T Q_qq qd + 1/2 delta^T Q_dd delta + c_q^T qd
///   s.t. J qd + delta = nu_star, A qd <= b.
struct SlackQPForm {
  Eigen::MatrixXd Q_qq;                // n x n SPD
  Eigen::Matrix<double, 6, 6> Q_dd;    // SPD
  Eigen::VectorXd c_q;
  Eigen::Matrix<double, 6, Eigen::Dynamic> J;
  Eigen::Matrix<double, 6, 1> nu_star;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  int num_vars() const { return static_cast<int>(Q_qq.rows()); }
};

/// Eliminates the slack by substituting delta = nu_star - J qd:
///   Q_red = Q_qq + J^T Q_dd J,  c_red = c_q - J^T Q_dd nu_star,
/// constraints passed through unchanged. Q_red inherits definiteness from Q_qq.
QPProblem reduce_slack_qp(const SlackQPForm& f);

/// Literal (n+6)-variable stacking of the slack form: variables (qd; delta),
/// block-diagonal Hessian, 6-row equality block [J I] (qd; delta) = nu_star.
QPProblem slack_qp_problem(const SlackQPForm& f);

/// Dense dual active-set solver (Goldfarb-Idnani). Starts from the
/// unconstrained minimizer, adds the most violated constraint each iteration
/// (lowest index on ties), drops blocking constraints along partial steps.
/// Equality rows enter the active set first and are never dropped. A warm
/// start is verified directly: the active set implied by the warm point is
/// re-solved and accepted if it passes the KKT conditions, so re-solving an
/// identical problem costs one iteration.
class QPSolver {
 public:
  struct Settings {
    int max_iterations = 200;
    double constraint_tol = 1e-10;
    double regularization = 1e-10;  // added to diag(Q) before factorization
    double kkt_tol = 1e-8;          // optimality is downgraded above this
  };

  QPSolver() = default;
  explicit QPSolver(Settings s) : settings_(s) {}

  QPSolution solve(const QPProblem& p,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

  const Settings& settings() const { return settings_; }

 private:
  Settings settings_;

  // Workspace kept across solves of same-sized problems.
  Eigen::LLT<Eigen::MatrixXd> q_llt_;
  Eigen::MatrixXd q_reg_;

  bool try_warm_start(const QPProblem& p, const Eigen::VectorXd& warm, QPSolution& out);
};

/// Convenience one-shot solve with a fresh solver.
QPSolution solve_qp(const QPProblem& p,
                    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Writes a plain-text dump of the problem for offline inspection.
/// Format: a header line `n k p`, then labeled blocks Q, c, A, b, E, d with
/// one row per line, entries space-separated, row-major, full precision.
void write_debug(const QPProblem& p, const std::string& path);

}  // namespace wbmm
