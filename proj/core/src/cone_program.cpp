#include "risopt/cone_program.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ConeProgram::ConeProgram(int num_vars) {
  require(num_vars >= 1, "ConeProgram: num_vars must be >= 1");
  lb_ = Eigen::VectorXd::Constant(num_vars, -kInf);
  ub_ = Eigen::VectorXd::Constant(num_vars, kInf);
}

int ConeProgram::add_variable(double lb, double ub) {
  require(lb <= ub, "ConeProgram: empty bound interval");
  const int idx = num_vars();
  lb_.conservativeResize(idx + 1);
  ub_.conservativeResize(idx + 1);
  lb_(idx) = lb;
  ub_(idx) = ub;

  // The new variable enters every previously added row (and a linear
  // objective) with coefficient zero, so stored data stays consistently
  // sized with num_vars().
  const auto pad = [idx](Eigen::VectorXd& v) {
    v.conservativeResize(idx + 1);
    v(idx) = 0.0;
  };
  for (auto& eq : equalities_) pad(eq.a);
  for (auto& in : inequalities_) pad(in.a);
  for (auto& q : quadratics_) {
    pad(q.a);
    q.Q.conservativeResize(idx + 1, idx + 1);
    q.Q.row(idx).setZero();
    q.Q.col(idx).setZero();
  }
  for (auto& s : socs_) {
    pad(s.c);
    s.A.conservativeResize(Eigen::NoChange, idx + 1);
    s.A.col(idx).setZero();
  }
  if (objective_.kind == ObjectiveKind::maximize_linear && objective_.linear.size() == idx) {
    pad(objective_.linear);
  }
  if (initial_guess_ && initial_guess_->size() == idx) {
    // Seed the appended variable inside its box so the stored guess stays a
    // usable hint.
    double seed = 0.0;
    if (std::isfinite(lb) && std::isfinite(ub)) {
      seed = 0.5 * (lb + ub);
    } else if (std::isfinite(lb)) {
      seed = lb + 1.0;
    } else if (std::isfinite(ub)) {
      seed = ub - 1.0;
    }
    initial_guess_->conservativeResize(idx + 1);
    (*initial_guess_)(idx) = seed;
  }
  return idx;
}

void ConeProgram::check_dim(const Eigen::VectorXd& a, const char* what) const {
  require(a.size() == num_vars(), what);
}

void ConeProgram::set_maximize_linear(const Eigen::VectorXd& c) {
  check_dim(c, "ConeProgram: objective dimension mismatch");
  objective_ = Objective{ObjectiveKind::maximize_linear, c, {}};
}

void ConeProgram::set_maximize_geometric_mean(const std::vector<int>& vars) {
  require(!vars.empty(), "ConeProgram: empty geometric-mean variable set");
  for (int v : vars) require(v >= 0 && v < num_vars(), "ConeProgram: mean variable out of range");
  objective_ = Objective{ObjectiveKind::maximize_geometric_mean, {}, vars};
}

void ConeProgram::set_maximize_mean_log(const std::vector<int>& vars) {
  require(!vars.empty(), "ConeProgram: empty mean-log variable set");
  for (int v : vars) require(v >= 0 && v < num_vars(), "ConeProgram: mean variable out of range");
  objective_ = Objective{ObjectiveKind::maximize_mean_log, {}, vars};
}

void ConeProgram::add_equality(const Eigen::VectorXd& a, double b) {
  check_dim(a, "ConeProgram: equality dimension mismatch");
  equalities_.push_back({a, b});
}

void ConeProgram::add_inequality(const Eigen::VectorXd& a, double b) {
  check_dim(a, "ConeProgram: inequality dimension mismatch");
  inequalities_.push_back({a, b});
}

void ConeProgram::add_quadratic(const Eigen::MatrixXd& Q, const Eigen::VectorXd& a, double b) {
  check_dim(a, "ConeProgram: quadratic linear-term dimension mismatch");
  require(Q.rows() == num_vars() && Q.cols() == num_vars(),
          "ConeProgram: quadratic matrix dimension mismatch");
  const Eigen::MatrixXd sym = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() >= -1e-9,
          "ConeProgram: quadratic matrix is not PSD");
  quadratics_.push_back({sym, a, b});
}

void ConeProgram::add_quadratic_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& a,
                                     double b) {
  check_dim(a, "ConeProgram: quadratic linear-term dimension mismatch");
  require(G.cols() == num_vars(), "ConeProgram: Gram factor dimension mismatch");
  quadratics_.push_back({G.transpose() * G, a, b});
}

void ConeProgram::add_soc(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, double d) {
  check_dim(c, "ConeProgram: cone linear-term dimension mismatch");
  require(A.cols() == num_vars() && A.rows() == b.size(),
          "ConeProgram: cone matrix dimension mismatch");
  socs_.push_back({A, b, c, d});
}

void ConeProgram::set_initial_guess(const Eigen::VectorXd& x) {
  check_dim(x, "initial guess");
  require(x.allFinite(), "ConeProgram: initial guess must be finite");
  initial_guess_ = x;
}

void ConeProgram::set_lower_bound(int i, double v) {
  require(i >= 0 && i < num_vars(), "ConeProgram: bound index out of range");
  require(v <= ub_(i), "ConeProgram: empty bound interval");
  lb_(i) = v;
}

void ConeProgram::set_upper_bound(int i, double v) {
  require(i >= 0 && i < num_vars(), "ConeProgram: bound index out of range");
  require(v >= lb_(i), "ConeProgram: empty bound interval");
  ub_(i) = v;
}

double ConeProgram::max_violation(const Eigen::VectorXd& x) const {
  double viol = 0.0;
  const auto bump = [&viol](double v) { viol = std::max(viol, v); };
  for (const auto& eq : equalities_) bump(std::abs(eq.a.dot(x) - eq.b));
  for (const auto& in : inequalities_) bump(in.a.dot(x) - in.b);
  for (const auto& q : quadratics_) bump(x.dot(q.Q * x) + q.a.dot(x) + q.b);
  for (const auto& s : socs_) bump((s.A * x + s.b).norm() - (s.c.dot(x) + s.d));
  for (int i = 0; i < num_vars(); ++i) {
    if (std::isfinite(lb_(i))) bump(lb_(i) - x(i));
    if (std::isfinite(ub_(i))) bump(x(i) - ub_(i));
  }
  return viol;
}

void ConeProgram::dump(std::ostream& os) const {
  os << "coneprogram vars=" << num_vars() << " eq=" << equalities_.size()
     << " ineq=" << inequalities_.size() << " quad=" << quadratics_.size()
     << " soc=" << socs_.size() << "\n";
  os << "objective ";
  switch (objective_.kind) {
    case ObjectiveKind::maximize_linear:
      os << "linear";
      for (Eigen::Index i = 0; i < objective_.linear.size(); ++i) os << ' ' << objective_.linear(i);
      break;
    case ObjectiveKind::maximize_geometric_mean:
      os << "geomean";
      for (int v : objective_.mean_vars) os << ' ' << v;
      break;
    case ObjectiveKind::maximize_mean_log:
      os << "meanlog";
      for (int v : objective_.mean_vars) os << ' ' << v;
      break;
  }
  os << "\n";
  for (int i = 0; i < num_vars(); ++i) {
    if (std::isfinite(lb_(i)) || std::isfinite(ub_(i))) {
      os << "bound " << i << ' ' << lb_(i) << ' ' << ub_(i) << "\n";
    }
  }
  const auto row = [&os](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << v(i);
  };
  for (const auto& eq : equalities_) {
    os << "eq " << eq.b;
    row(eq.a);
    os << "\n";
  }
  for (const auto& in : inequalities_) {
    os << "ineq " << in.b;
    row(in.a);
    os << "\n";
  }
  for (const auto& q : quadratics_) {
    os << "quad " << q.b;
    row(q.a);
    for (Eigen::Index r = 0; r < q.Q.rows(); ++r) row(q.Q.row(r).transpose());
    os << "\n";
  }
  for (const auto& s : socs_) {
    os << "soc " << s.d;
    row(s.c);
    row(s.b);
    for (Eigen::Index r = 0; r < s.A.rows(); ++r) row(s.A.row(r).transpose());
    os << "\n";
  }
}

}  // namespace risopt
