#include "wbmm/qp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wbmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

const char* qp_status_name(QPStatus s) {
  switch (s) {
    case QPStatus::optimal: return "optimal";
    case QPStatus::infeasible: return "infeasible";
    case QPStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

QPProblem::QPProblem(Eigen::MatrixXd Q_in, Eigen::VectorXd c_in, Eigen::MatrixXd A_in,
                     Eigen::VectorXd b_in, Eigen::MatrixXd E_in, Eigen::VectorXd d_in)
    : Q(std::move(Q_in)),
      c(std::move(c_in)),
      A(std::move(A_in)),
      b(std::move(b_in)),
      E(std::move(E_in)),
      d(std::move(d_in)) {
  const int n = static_cast<int>(Q.rows());
  require(Q.cols() == n && n > 0, "Q must be square and non-empty");
  require(c.size() == n, "c dimension mismatch");
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-10, "Q must be symmetric");
  if (A.size() == 0) A.resize(0, n);
  if (b.size() == 0) b.resize(0);
  if (E.size() == 0) E.resize(0, n);
  if (d.size() == 0) d.resize(0);
  require(A.cols() == n && A.rows() == b.size(), "(A, b) dimension mismatch");
  require(E.cols() == n && E.rows() == d.size(), "(E, d) dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt(Q + 1e-12 * Eigen::MatrixXd::Identity(n, n));
  require(llt.info() == Eigen::Success, "Q must be positive definite");
}

double kkt_residual(const QPProblem& p, const QPSolution& s) {
  const auto inf_norm = [](const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  };
  Eigen::VectorXd stat = p.Q * s.x + p.c;
  if (p.num_ineq() > 0) stat += p.A.transpose() * s.lambda;
  if (p.num_eq() > 0) stat += p.E.transpose() * s.mu;

  double res = inf_norm(stat);
  if (p.num_ineq() > 0) {
    const Eigen::VectorXd slack = p.A * s.x - p.b;
    res = std::max(res, inf_norm(slack.cwiseMax(0.0)));
    res = std::max(res, inf_norm(s.lambda.cwiseMin(0.0)));
    res = std::max(res, inf_norm(s.lambda.cwiseProduct(slack)));
  }
  if (p.num_eq() > 0) {
    res = std::max(res, inf_norm(p.E * s.x - p.d));
  }
  return res;
}

QPProblem reduce_slack_qp(const SlackQPForm& f) {
  const Eigen::MatrixXd q_red = f.Q_qq + f.J.transpose() * f.Q_dd * f.J;
  const Eigen::VectorXd c_red = f.c_q - f.J.transpose() * f.Q_dd * f.nu_star;
  return QPProblem(q_red, c_red, f.A, f.b);
}

QPProblem slack_qp_problem(const SlackQPForm& f) {
  const int n = f.num_vars();
  const int k = static_cast<int>(f.A.rows());

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n + 6, n + 6);
  q.topLeftCorner(n, n) = f.Q_qq;
  q.bottomRightCorner(6, 6) = f.Q_dd;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 6);
  c.head(n) = f.c_q;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, n + 6);
  a.leftCols(n) = f.A;

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(6, n + 6);
  e.leftCols(n) = f.J;
  e.rightCols(6).setIdentity();

  return QPProblem(std::move(q), std::move(c), std::move(a), f.b, std::move(e), f.nu_star);
}

namespace {

// One active constraint: equality rows enter with a sign chosen so their
// violation at entry is non-negative; they are never dropped.
struct ActiveEntry {
  int row;        // index into A (is_eq == false) or E (is_eq == true)
  bool is_eq;
  double sign;    // +1 for inequalities, +/-1 for equalities
  double u = 0.;  // multiplier in the solver's sign convention
};

struct ActiveSet {
  std::vector<ActiveEntry> entries;
  Eigen::MatrixXd normals;  // one row per entry

  void rebuild(const QPProblem& p) {
    const int n = p.num_vars();
    normals.resize(static_cast<Eigen::Index>(entries.size()), n);
    for (size_t i = 0; i < entries.size(); ++i) {
      const ActiveEntry& e = entries[i];
      normals.row(static_cast<Eigen::Index>(i)) =
          e.is_eq ? (e.sign * p.E.row(e.row)) : Eigen::RowVectorXd(p.A.row(e.row));
    }
  }
};

}  // namespace

bool QPSolver::try_warm_start(const QPProblem& p, const Eigen::VectorXd& warm, QPSolution& out) {
  const int n = p.num_vars();
  if (warm.size() != n) return false;

  std::vector<int> active_ineq;
  for (int j = 0; j < p.num_ineq(); ++j) {
    if (std::abs(p.A.row(j).dot(warm) - p.b[j]) <= 1e-9) active_ineq.push_back(j);
  }
  const int a = static_cast<int>(active_ineq.size()) + p.num_eq();
  if (a > n) return false;

  Eigen::MatrixXd normals(a, n);
  Eigen::VectorXd rhs(a);
  for (int i = 0; i < p.num_eq(); ++i) {
    normals.row(i) = p.E.row(i);
    rhs[i] = p.d[i];
  }
  for (size_t i = 0; i < active_ineq.size(); ++i) {
    normals.row(p.num_eq() + static_cast<int>(i)) = p.A.row(active_ineq[i]);
    rhs[p.num_eq() + static_cast<int>(i)] = p.b[active_ineq[i]];
  }

  const Eigen::VectorXd x_free = q_llt_.solve(-p.c);
  Eigen::VectorXd x, w;
  if (a == 0) {
    x = x_free;
    w.resize(0);
  } else {
    const Eigen::MatrixXd y = q_llt_.solve(normals.transpose());
    const Eigen::MatrixXd g = normals * y;
    Eigen::LLT<Eigen::MatrixXd> g_llt(g);
    if (g_llt.info() != Eigen::Success) return false;
    w = g_llt.solve(normals * x_free - rhs);
    x = x_free - y * w;
  }

  // Accept only if the implied point is a KKT point of the full problem.
  for (int i = p.num_eq(); i < a; ++i) {
    if (w[i] < -1e-11) return false;
  }
  if (p.num_ineq() > 0 && (p.A * x - p.b).maxCoeff() > 1e-9) return false;
  if (p.num_eq() > 0 && (p.E * x - p.d).cwiseAbs().maxCoeff() > 1e-9) return false;

  out.x = x;
  out.lambda = Eigen::VectorXd::Zero(p.num_ineq());
  for (size_t i = 0; i < active_ineq.size(); ++i) {
    out.lambda[active_ineq[i]] = std::max(0.0, w[p.num_eq() + static_cast<int>(i)]);
  }
  out.mu = w.head(p.num_eq());
  out.iterations = 1;
  out.status = QPStatus::optimal;
  return kkt_residual(p, out) <= settings_.kkt_tol;
}

QPSolution QPSolver::solve(const QPProblem& p, const std::optional<Eigen::VectorXd>& warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const int n = p.num_vars();
  const int k = p.num_ineq();
  const int p_eq = p.num_eq();

  q_reg_ = p.Q;
  q_reg_.diagonal().array() += settings_.regularization;
  q_llt_.compute(q_reg_);
  if (q_llt_.info() != Eigen::Success) {
    throw std::invalid_argument("QP Hessian is not positive definite after regularization");
  }

  QPSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(k);
  sol.mu = Eigen::VectorXd::Zero(p_eq);

  if (warm_start && try_warm_start(p, *warm_start, sol)) {
    sol.solve_time = elapsed();
    return sol;
  }

  Eigen::VectorXd x = q_llt_.solve(-p.c);
  ActiveSet active;
  int iterations = 0;
  int next_eq = 0;  // equalities are admitted in index order first

  const auto finish = [&](QPStatus status) {
    sol.x = x;
    sol.lambda.setZero();
    sol.mu.setZero();
    for (const ActiveEntry& e : active.entries) {
      if (e.is_eq) {
        sol.mu[e.row] = e.sign * e.u;
      } else {
        sol.lambda[e.row] = std::max(0.0, e.u);
      }
    }
    sol.iterations = iterations;
    if (status == QPStatus::optimal && kkt_residual(p, sol) > settings_.kkt_tol) {
      status = QPStatus::max_iter;
    }
    sol.status = status;
    sol.solve_time = elapsed();
    return sol;
  };

  const auto infeasible_certificate = [&](const Eigen::VectorXd& r, int chosen_row, bool chosen_eq,
                                          double chosen_sign) {
    sol.certificate = Eigen::VectorXd::Zero(k + p_eq);
    const int chosen_idx = chosen_eq ? k + chosen_row : chosen_row;
    sol.certificate[chosen_idx] += chosen_sign;
    for (size_t i = 0; i < active.entries.size(); ++i) {
      const ActiveEntry& e = active.entries[i];
      const int idx = e.is_eq ? k + e.row : e.row;
      sol.certificate[idx] -= e.sign * r[static_cast<Eigen::Index>(i)];
    }
  };

  while (true) {
    if (iterations >= settings_.max_iterations) return finish(QPStatus::max_iter);
    ++iterations;

    // Pick the next constraint: all equalities first, then the most violated
    // inequality (lowest index on ties via strict comparison).
    int chosen_row = -1;
    bool chosen_eq = false;
    double chosen_sign = 1.0;
    double violation = settings_.constraint_tol;
    if (next_eq < p_eq) {
      chosen_row = next_eq++;
      chosen_eq = true;
      const double v = p.E.row(chosen_row).dot(x) - p.d[chosen_row];
      chosen_sign = (v >= 0.0) ? 1.0 : -1.0;
      violation = std::abs(v);
    } else {
      for (int j = 0; j < k; ++j) {
        bool already_active = false;
        for (const ActiveEntry& e : active.entries) {
          if (!e.is_eq && e.row == j) {
            already_active = true;
            break;
          }
        }
        if (already_active) continue;
        const double v = p.A.row(j).dot(x) - p.b[j];
        if (v > violation) {
          violation = v;
          chosen_row = j;
        }
      }
      if (chosen_row < 0) return finish(QPStatus::optimal);
    }

    const Eigen::RowVectorXd normal_row =
        chosen_eq ? Eigen::RowVectorXd(chosen_sign * p.E.row(chosen_row))
                  : Eigen::RowVectorXd(p.A.row(chosen_row));
    const Eigen::VectorXd a_p = normal_row.transpose();
    double s_p = chosen_eq ? violation : (p.A.row(chosen_row).dot(x) - p.b[chosen_row]);
    double u_p = 0.0;

    // Inner loop: step toward the chosen constraint, dropping blockers.
    while (true) {
      if (iterations >= settings_.max_iterations) return finish(QPStatus::max_iter);

      const int a = static_cast<int>(active.entries.size());
      active.rebuild(p);

      const Eigen::VectorXd qi_ap = q_llt_.solve(a_p);
      Eigen::VectorXd z, r;
      if (a == 0) {
        z = qi_ap;
        r.resize(0);
      } else {
        const Eigen::MatrixXd y = q_llt_.solve(active.normals.transpose());
        const Eigen::MatrixXd g = active.normals * y;
        Eigen::LLT<Eigen::MatrixXd> g_llt(g);
        if (g_llt.info() != Eigen::Success) {
          // Active normals degenerated numerically; report the best point.
          return finish(QPStatus::max_iter);
        }
        r = g_llt.solve(active.normals * qi_ap);
        z = qi_ap - y * r;
      }

      const double ztap = a_p.dot(z);
      const bool dependent = ztap <= 1e-12 * (1.0 + qi_ap.norm() * a_p.norm());

      // Blocking step over droppable (inequality) members.
      double t1 = kInf;
      int blocker = -1;
      for (int i = 0; i < a; ++i) {
        const ActiveEntry& e = active.entries[static_cast<size_t>(i)];
        if (e.is_eq) continue;
        if (r[i] > settings_.constraint_tol) {
          const double ratio = e.u / r[i];
          if (ratio < t1) {
            t1 = ratio;
            blocker = i;
          }
        }
      }

      const double t2 = dependent ? kInf : s_p / ztap;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        infeasible_certificate(r, chosen_row, chosen_eq, chosen_sign);
        return finish(QPStatus::infeasible);
      }

      if (!dependent) x -= t * z;
      for (int i = 0; i < a; ++i) active.entries[static_cast<size_t>(i)].u -= t * r[i];
      u_p += t;
      s_p -= t * (dependent ? 0.0 : ztap);

      if (t == t2 && !dependent) {
        active.entries.push_back(ActiveEntry{chosen_row, chosen_eq, chosen_sign, u_p});
        break;
      }
      // Partial step: drop the blocker and retry the same constraint.
      active.entries.erase(active.entries.begin() + blocker);
      ++iterations;
    }
  }
}

QPSolution solve_qp(const QPProblem& p, const std::optional<Eigen::VectorXd>& warm_start) {
  QPSolver solver;
  return solver.solve(p, warm_start);
}

void write_debug(const QPProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open debug dump path: " + path);
  char buf[32];
  const auto row = [&](const double* data, Eigen::Index len) {
    for (Eigen::Index i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
      out << buf << (i + 1 < len ? " " : "");
    }
    out << "\n";
  };
  out << p.num_vars() << " " << p.num_ineq() << " " << p.num_eq() << "\n";
  const auto block = [&](const char* name, const Eigen::MatrixXd& m) {
    out << name << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Eigen::RowVectorXd r = m.row(i);
      row(r.data(), r.size());
    }
  };
  const auto vec = [&](const char* name, const Eigen::VectorXd& v) {
    out << name << "\n";
    row(v.data(), v.size());
  };
  block("Q", p.Q);
  vec("c", p.c);
  block("A", p.A);
  vec("b", p.b);
  block("E", p.E);
  vec("d", p.d);
}

}  // namespace wbmm
