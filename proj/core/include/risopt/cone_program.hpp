#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace risopt {

// Solver-agnostic description of a convex program over x in R^n:
//
//   maximize    c'x | (prod_{g in G} x_g)^(1/|G|) | (1/|G|) sum_g log x_g
//   subject to  a'x  = b          (affine equality)
//               a'x <= b          (affine inequality)
//               x'Qx + a'x + b <= 0,  Q PSD   (convex quadratic)
//               ||Ax + b||_2 <= c'x + d       (second-order cone)
//               lb <= x <= ub                 (box, entrywise, +/-inf allowed)
//
// The geometric-mean objective is what the subproblem builders emit; solve()
// handles it through one of the encodings in solver.hpp.  The mean-log form
// is the smooth encoding target and shares the argmax by monotonicity.

enum class ObjectiveKind { maximize_linear, maximize_geometric_mean, maximize_mean_log };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::maximize_linear;
  Eigen::VectorXd linear;       // used by maximize_linear
  std::vector<int> mean_vars;   // used by the two mean forms
};

struct AffineConstraint {
  Eigen::VectorXd a;
  double b = 0.0;
};

struct QuadraticConstraint {
  Eigen::MatrixXd Q;
  Eigen::VectorXd a;
  double b = 0.0;
};

struct SocConstraint {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double d = 0.0;
};

class ConeProgram {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  explicit ConeProgram(int num_vars);

  int num_vars() const { return static_cast<int>(lb_.size()); }

  // Appends a fresh variable (used by objective encodings); returns its index.
  int add_variable(double lb = -kInf, double ub = kInf);

  void set_maximize_linear(const Eigen::VectorXd& c);
  void set_maximize_geometric_mean(const std::vector<int>& vars);
  void set_maximize_mean_log(const std::vector<int>& vars);
  const Objective& objective() const { return objective_; }

  void add_equality(const Eigen::VectorXd& a, double b);
  void add_inequality(const Eigen::VectorXd& a, double b);

  // x'Qx + a'x + b <= 0.  Q is symmetrized and verified PSD
  // (min eigenvalue >= -1e-9); a violating Q throws std::invalid_argument.
  void add_quadratic(const Eigen::MatrixXd& Q, const Eigen::VectorXd& a, double b);

  // Same constraint with Q = G'G, PSD by construction — no spectral check.
  // Preferred in hot paths where G (few rows) is what the caller has anyway.
  void add_quadratic_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& a, double b);

  void add_soc(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
               double d);

  void set_lower_bound(int i, double v);
  void set_upper_bound(int i, double v);
  double lower_bound(int i) const { return lb_[i]; }
  double upper_bound(int i) const { return ub_[i]; }
  const Eigen::VectorXd& lower_bounds() const { return lb_; }
  const Eigen::VectorXd& upper_bounds() const { return ub_; }

  const std::vector<AffineConstraint>& equalities() const { return equalities_; }
  const std::vector<AffineConstraint>& inequalities() const { return inequalities_; }
  const std::vector<QuadraticConstraint>& quadratics() const { return quadratics_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }

  // Optional solver seed baked into the program (e.g. an SCA expansion
  // point, where every surrogate row is tight).  Used when the caller does
  // not pass a warm start; a seed outside the domain only shortens the
  // feasibility phase, so it never has to be feasible.
  void set_initial_guess(const Eigen::VectorXd& x);
  const std::optional<Eigen::VectorXd>& initial_guess() const { return initial_guess_; }

  // Largest violation of every constraint and bound at x (0 if feasible).
  double max_violation(const Eigen::VectorXd& x) const;

  // Structured text dump for offline inspection: a header line with counts,
  // then one line per bound/constraint ("eq", "ineq", "quad", "soc" records
  // with their coefficients in row-major order).
  void dump(std::ostream& os) const;

 private:
  void check_dim(const Eigen::VectorXd& a, const char* what) const;

  Objective objective_;
  std::vector<AffineConstraint> equalities_;
  std::vector<AffineConstraint> inequalities_;
  std::vector<QuadraticConstraint> quadratics_;
  std::vector<SocConstraint> socs_;
  Eigen::VectorXd lb_, ub_;
  std::optional<Eigen::VectorXd> initial_guess_;
};

}  // namespace risopt
