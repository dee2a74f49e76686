#include "risopt/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

constexpr double kBarrierMu = 20.0;     // path-following multiplier
constexpr double kCenterDec2 = 1e-4;    // mid-stage centering target: decrement^2
constexpr double kCertGradTol = 5e-7;   // final-stage ||grad||_inf / t target
constexpr double kStepFloor = 1e-14;
constexpr double kDivergence = 1e12;    // ||x||_inf beyond this = unbounded ray
constexpr double kPhase1Exit = -1e-6;   // slack this negative = safely interior

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Objective term -weight * log(a'x + b); plain variables use a = e_i, b = 0.
// General affine forms appear after equality elimination.
struct LogTerm {
  Eigen::VectorXd a;
  double b = 0.0;
};

// Internal normal form: minimize c0'x - sum_j weight*log(a_j'x + b_j)
// subject to inequalities, quadratics, cones and boxes.  Equalities are
// eliminated before a Model is built.
struct Model {
  int n = 0;
  Eigen::VectorXd c0;
  std::vector<LogTerm> logs;
  double log_weight = 0.0;
  std::vector<AffineConstraint> ineqs;  // a'x <= b
  std::vector<QuadraticConstraint> quads;
  std::vector<SocConstraint> socs;
  Eigen::VectorXd lb, ub;
  int slack = -1;  // feasibility-phase slack variable, or -1

  // Total degree of the barrier: the duality gap at a t-center is degree/t.
  // Scalar terms (-log of an affine or concave-quadratic slack, box sides)
  // are degree 1; the cone barrier -log(v^2 - |u|^2) is degree 2.
  int barrier_degree() const {
    int m = static_cast<int>(ineqs.size() + quads.size() + 2 * socs.size());
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(lb(i))) ++m;
      if (std::isfinite(ub(i))) ++m;
    }
    return m;
  }
};

bool in_domain(const Model& m, const Eigen::VectorXd& x, double margin) {
  if (!x.allFinite()) return false;
  for (const auto& t : m.logs) {
    if (t.a.dot(x) + t.b <= margin) return false;
  }
  for (const auto& c : m.ineqs) {
    if (c.b - c.a.dot(x) <= margin) return false;
  }
  for (const auto& q : m.quads) {
    if (-(x.dot(q.Q * x) + q.a.dot(x) + q.b) <= margin) return false;
  }
  for (const auto& s : m.socs) {
    const double v = s.c.dot(x) + s.d;
    if (v <= margin) return false;
    if (v * v - (s.A * x + s.b).squaredNorm() <= margin) return false;
  }
  for (int i = 0; i < m.n; ++i) {
    if (std::isfinite(m.lb(i)) && x(i) - m.lb(i) <= margin) return false;
    if (std::isfinite(m.ub(i)) && m.ub(i) - x(i) <= margin) return false;
  }
  return true;
}

// Barrier-augmented objective value; +inf outside the domain.
double psi_value(const Model& m, const Eigen::VectorXd& x, double t) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!x.allFinite()) return inf;
  double value = t * m.c0.dot(x);
  for (const auto& lt : m.logs) {
    const double y = lt.a.dot(x) + lt.b;
    if (y <= 0.0) return inf;
    value -= t * m.log_weight * std::log(y);
  }
  for (const auto& c : m.ineqs) {
    const double y = c.b - c.a.dot(x);
    if (y <= 0.0) return inf;
    value -= std::log(y);
  }
  for (const auto& q : m.quads) {
    const double y = -(x.dot(q.Q * x) + q.a.dot(x) + q.b);
    if (y <= 0.0) return inf;
    value -= std::log(y);
  }
  for (const auto& s : m.socs) {
    const double v = s.c.dot(x) + s.d;
    if (v <= 0.0) return inf;
    const double w = v * v - (s.A * x + s.b).squaredNorm();
    if (w <= 0.0) return inf;
    value -= std::log(w);
  }
  for (int i = 0; i < m.n; ++i) {
    if (std::isfinite(m.lb(i))) {
      const double y = x(i) - m.lb(i);
      if (y <= 0.0) return inf;
      value -= std::log(y);
    }
    if (std::isfinite(m.ub(i))) {
      const double y = m.ub(i) - x(i);
      if (y <= 0.0) return inf;
      value -= std::log(y);
    }
  }
  return value;
}

// Value, gradient and Hessian of the barrier-augmented objective.  The
// caller guarantees x is in the domain.
void psi_derivs(const Model& m, const Eigen::VectorXd& x, double t, double& value,
                Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  value = t * m.c0.dot(x);
  grad = t * m.c0;
  hess.setZero(m.n, m.n);

  for (const auto& lt : m.logs) {
    const double y = lt.a.dot(x) + lt.b;
    const double w = t * m.log_weight;
    value -= w * std::log(y);
    grad.noalias() -= (w / y) * lt.a;
    hess.noalias() += (w / (y * y)) * (lt.a * lt.a.transpose());
  }
  for (const auto& c : m.ineqs) {
    const double y = c.b - c.a.dot(x);
    value -= std::log(y);
    grad.noalias() += (1.0 / y) * c.a;
    hess.noalias() += (1.0 / (y * y)) * (c.a * c.a.transpose());
  }
  for (const auto& q : m.quads) {
    const Eigen::VectorXd qx = q.Q * x;
    const double y = -(x.dot(qx) + q.a.dot(x) + q.b);
    const Eigen::VectorXd gf = 2.0 * qx + q.a;
    value -= std::log(y);
    grad.noalias() += (1.0 / y) * gf;
    hess.noalias() += (2.0 / y) * q.Q;
    hess.noalias() += (1.0 / (y * y)) * (gf * gf.transpose());
  }
  for (const auto& s : m.socs) {
    const Eigen::VectorXd u = s.A * x + s.b;
    const double v = s.c.dot(x) + s.d;
    const double w = v * v - u.squaredNorm();
    const Eigen::VectorXd gw = 2.0 * v * s.c - 2.0 * (s.A.transpose() * u);
    value -= std::log(w);
    grad.noalias() -= (1.0 / w) * gw;
    hess.noalias() += (2.0 / w) * (s.A.transpose() * s.A);
    hess.noalias() -= (2.0 / w) * (s.c * s.c.transpose());
    hess.noalias() += (1.0 / (w * w)) * (gw * gw.transpose());
  }
  for (int i = 0; i < m.n; ++i) {
    if (std::isfinite(m.lb(i))) {
      const double y = x(i) - m.lb(i);
      value -= std::log(y);
      grad(i) -= 1.0 / y;
      hess(i, i) += 1.0 / (y * y);
    }
    if (std::isfinite(m.ub(i))) {
      const double y = m.ub(i) - x(i);
      value -= std::log(y);
      grad(i) += 1.0 / y;
      hess(i, i) += 1.0 / (y * y);
    }
  }
}

enum class LoopExit { gap_reached, early_slack, diverged, stuck, budget, bad_numerics };

// Newton path-following on psi(x, t) with t escalating by kBarrierMu until
// the duality-gap bound m/t falls below tol_gap.  `used` accumulates Newton
// steps across calls so the overall budget spans both phases.
LoopExit barrier_loop(const Model& m, Eigen::VectorXd& x, double tol_gap, int max_total,
                      int& used) {
  const int degree = m.barrier_degree();
  // The schedule lands exactly on the smallest t reaching the gap target:
  // overshooting t (the naive power-of-mu ladder can overshoot by mu x)
  // inflates the rounding noise of active-constraint slacks, which scales
  // linearly with t and caps the precision of the final gradient.
  const double t_target = degree > 0 ? static_cast<double>(degree) / tol_gap : 1.0;
  double t = 1.0;
  double value = 0.0;
  Eigen::VectorXd grad(m.n), dx(m.n);
  Eigen::MatrixXd hess(m.n, m.n);

  for (;;) {
    // The last stage must center tightly enough for the optimality
    // certificate (||grad||_inf / t), not just for path following.
    const bool final_stage = degree == 0 || t >= t_target;
    // A stage runs until the iterate is centered: advancing t on an
    // uncentered point abandons the central path and compounds (long damped-
    // Newton descents, e.g. a feasibility slack walking down from a distant
    // start, legitimately need many iterations).  The total budget and the
    // stall checks below bound the work instead of a per-stage cap.
    for (int it = 0;; ++it) {
      if (m.slack >= 0 && x(m.slack) <= kPhase1Exit) return LoopExit::early_slack;
      if (used >= max_total) return LoopExit::budget;

      psi_derivs(m, x, t, value, grad, hess);
      if (!grad.allFinite() || !hess.allFinite()) return LoopExit::bad_numerics;

      // Factor with escalating Tikhonov regularization until the step
      // actually solves the system.
      double reg = 0.0;
      bool solved = false;
      for (;;) {
        Eigen::MatrixXd h = hess;
        if (reg > 0.0) h.diagonal().array() += reg;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() == Eigen::Success) {
          dx = ldlt.solve(-grad);
          const double resid = (h * dx + grad).lpNorm<Eigen::Infinity>();
          if (dx.allFinite() && resid <= 1e-8 * (1.0 + grad.lpNorm<Eigen::Infinity>())) {
            solved = true;
            break;
          }
        }
        reg = (reg == 0.0) ? 1e-12 : reg * 100.0;
        if (reg > 1e-2) break;
      }
      if (!solved) return LoopExit::stuck;
      ++used;

      const double decrement2 = -grad.dot(dx);
      // Mid-path stages only need the modest centering that keeps the next
      // t-step inside Newton's reach (decrement well under 1/4); demanding
      // machine-level decrements can sit below the rounding floor of a badly
      // scale-mixed Hessian and spin without progress.  The last stage stops
      // exactly when the optimality certificate (||grad||_inf / t) is met,
      // which stays resolvable where the decrement is not.
      const bool centered =
          final_stage ? grad.lpNorm<Eigen::Infinity>() <= kCertGradTol * t
                      : decrement2 <= kCenterDec2;
      if (centered) break;

      // Backtrack into the domain.
      double step = 1.0;
      while (step > kStepFloor && !in_domain(m, x + step * dx, 0.0)) step *= 0.5;
      if (step <= kStepFloor) return LoopExit::stuck;
      // Armijo on psi only while the predicted decrease (~decrement2/2) is
      // resolvable against |psi| in doubles.  Inside the quadratic region
      // (decrement <= 1/4) the pure damped-free step is safe for these
      // self-concordant barriers, and value-based backtracking would stall
      // on rounding noise once t grows large.
      if (decrement2 > 0.0625) {
        const double slope = grad.dot(dx);
        while (step > kStepFloor && psi_value(m, x + step * dx, t) > value + 0.25 * step * slope) {
          step *= 0.5;
        }
        if (step <= kStepFloor) return LoopExit::stuck;
      }
      x += step * dx;
      if (x.lpNorm<Eigen::Infinity>() > kDivergence) return LoopExit::diverged;
    }

    if (final_stage) return LoopExit::gap_reached;
    // Once a stage is centered the objective sits within degree/t of its
    // optimum, so a feasibility slack that cannot reach the exit threshold
    // even with that margin can never trigger the early exit: stop walking
    // t and let the caller decide from the slack value reached.
    if (m.slack >= 0 && x(m.slack) - static_cast<double>(degree) / t > kPhase1Exit) {
      return LoopExit::gap_reached;
    }
    t = std::min(t * kBarrierMu, t_target);
  }
}

// Feasibility phase: one extra slack variable relaxes every inequality-type
// constraint; minimizing it decides strict feasibility.  Log-objective
// domains are protected by explicit rows so the returned point works as a
// phase-II start.
Model make_phase1(const Model& m2) {
  Model m;
  m.n = m2.n + 1;
  m.slack = m2.n;
  m.c0 = Eigen::VectorXd::Zero(m.n);
  m.c0(m.slack) = 1.0;
  m.log_weight = 0.0;

  const auto extend = [&](const Eigen::VectorXd& a, double slack_coef) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m.n);
    out.head(m2.n) = a;
    out(m.slack) = slack_coef;
    return out;
  };

  for (const auto& c : m2.ineqs) m.ineqs.push_back({extend(c.a, -1.0), c.b});
  for (const auto& lt : m2.logs) {
    // a'x + b >= kGeomeanFloor, slackened like every other row.
    m.ineqs.push_back({extend(-lt.a, -1.0), lt.b - kGeomeanFloor});
  }
  for (const auto& q : m2.quads) {
    Eigen::MatrixXd bigq = Eigen::MatrixXd::Zero(m.n, m.n);
    bigq.topLeftCorner(m2.n, m2.n) = q.Q;
    m.quads.push_back({bigq, extend(q.a, -1.0), q.b});
  }
  for (const auto& s : m2.socs) {
    Eigen::MatrixXd biga = Eigen::MatrixXd::Zero(s.A.rows(), m.n);
    biga.leftCols(m2.n) = s.A;
    m.socs.push_back({biga, s.b, extend(s.c, 1.0), s.d});
  }
  m.lb = Eigen::VectorXd::Constant(m.n, -ConeProgram::kInf);
  m.ub = Eigen::VectorXd::Constant(m.n, ConeProgram::kInf);
  m.lb.head(m2.n) = m2.lb;
  m.ub.head(m2.n) = m2.ub;
  m.lb(m.slack) = -1.0;  // bounded below so the phase has a finite optimum
  return m;
}

// Worst constraint value at x (quantity the phase-I slack must exceed).
double max_relaxable_violation(const Model& m2, const Eigen::VectorXd& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : m2.ineqs) worst = std::max(worst, c.a.dot(x) - c.b);
  for (const auto& lt : m2.logs) {
    worst = std::max(worst, kGeomeanFloor - (lt.a.dot(x) + lt.b));
  }
  for (const auto& q : m2.quads) {
    worst = std::max(worst, x.dot(q.Q * x) + q.a.dot(x) + q.b);
  }
  for (const auto& s : m2.socs) {
    worst = std::max(worst, (s.A * x + s.b).norm() - (s.c.dot(x) + s.d));
  }
  return worst;
}

// Strictly-inside-the-box default start.
Eigen::VectorXd default_start(const Model& m) {
  Eigen::VectorXd x(m.n);
  for (int i = 0; i < m.n; ++i) {
    const bool has_lb = std::isfinite(m.lb(i));
    const bool has_ub = std::isfinite(m.ub(i));
    if (has_lb && has_ub) {
      x(i) = 0.5 * (m.lb(i) + m.ub(i));
    } else if (has_lb) {
      x(i) = m.lb(i) + 1.0;
    } else if (has_ub) {
      x(i) = m.ub(i) - 1.0;
    } else {
      x(i) = 0.0;
    }
  }
  return x;
}

// Clamp a candidate start strictly inside the boxes (other constraint types
// are the feasibility phase's job).
void clamp_into_boxes(const Model& m, Eigen::VectorXd& x) {
  for (int i = 0; i < m.n; ++i) {
    const bool has_lb = std::isfinite(m.lb(i));
    const bool has_ub = std::isfinite(m.ub(i));
    double margin = 1e-8;
    if (has_lb && has_ub) margin = std::min(margin, 0.25 * (m.ub(i) - m.lb(i)));
    if (has_lb) x(i) = std::max(x(i), m.lb(i) + margin);
    if (has_ub) x(i) = std::min(x(i), m.ub(i) - margin);
  }
}

struct Reduction {
  bool active = false;
  Eigen::MatrixXd Z;   // orthonormal null-space basis of Aeq
  Eigen::VectorXd xp;  // particular solution of Aeq x = beq
};

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::numerical_failure: return "numerical-failure";
    case SolveStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

ConeProgram encode_geometric_mean(const ConeProgram& program, const std::vector<int>& vars,
                                  GeomeanEncoding encoding) {
  require(!vars.empty(), "encode_geometric_mean: empty variable set");
  for (int v : vars) {
    require(v >= 0 && v < program.num_vars(), "encode_geometric_mean: variable out of range");
  }
  ConeProgram out = program;

  if (encoding == GeomeanEncoding::mean_log) {
    for (int v : vars) out.set_lower_bound(v, std::max(out.lower_bound(v), kGeomeanFloor));
    out.set_maximize_mean_log(vars);
    return out;
  }

  // Rotated-cone cascade.  Leaves are the mean variables padded with the
  // root t up to a power of two; each tree level adds u with u^2 <= a*b via
  // ||(2u, a-b)|| <= a+b; then t^P <= (prod vars) * t^(P-L) makes
  // t <= geomean(vars).
  for (int v : vars) out.set_lower_bound(v, std::max(out.lower_bound(v), 0.0));
  if (vars.size() == 1) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(out.num_vars());
    c(vars[0]) = 1.0;
    out.set_maximize_linear(c);
    return out;
  }

  std::size_t leaves = 1;
  while (leaves < vars.size()) leaves *= 2;
  // All tree variables are allocated up front so every constraint row is
  // sized against the final variable count.
  const int t_idx = out.add_variable(0.0, ConeProgram::kInf);
  std::vector<int> aux;  // internal non-root nodes: leaves - 2 of them
  for (std::size_t i = 2; i < leaves; ++i) aux.push_back(out.add_variable(0.0, ConeProgram::kInf));

  std::size_t next_aux = 0;
  std::vector<int> level(vars.begin(), vars.end());
  level.resize(leaves, t_idx);
  while (level.size() > 1) {
    std::vector<int> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      const int a = level[i];
      const int b = level[i + 1];
      const int u = (level.size() == 2) ? t_idx : aux[next_aux++];
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, out.num_vars());
      rows(0, u) = 2.0;
      rows(1, a) += 1.0;
      rows(1, b) -= 1.0;  // a == b (t padding) leaves the row zero, as it should
      Eigen::VectorXd c = Eigen::VectorXd::Zero(out.num_vars());
      c(a) += 1.0;
      c(b) += 1.0;
      out.add_soc(rows, Eigen::VectorXd::Zero(2), c, 0.0);
      next.push_back(u);
    }
    level = std::move(next);
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(out.num_vars());
  c(t_idx) = 1.0;
  out.set_maximize_linear(c);
  return out;
}

SolveReport solve(const ConeProgram& input, const SolveOptions& options) {
  const auto t_begin = std::chrono::steady_clock::now();
  require(options.tol >= 1e-12, "solve: tol too small");
  require(options.max_iter >= 1, "solve: max_iter must be >= 1");

  // The geometric mean is solved through its smooth encoding; the variable
  // space is unchanged, so reports map back 1:1.
  const bool was_geomean =
      input.objective().kind == ObjectiveKind::maximize_geometric_mean;
  const ConeProgram program =
      was_geomean
          ? encode_geometric_mean(input, input.objective().mean_vars, GeomeanEncoding::mean_log)
          : input;

  SolveReport report;
  report.x = Eigen::VectorXd::Zero(program.num_vars());

  const auto finish = [&](SolveStatus status) {
    report.status = status;
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t_begin)
                              .count();
    return report;
  };

  // Equality elimination: x = xp + Z y with Z an orthonormal kernel basis.
  Reduction red;
  const int n_full = program.num_vars();
  if (!program.equalities().empty()) {
    const int p = static_cast<int>(program.equalities().size());
    Eigen::MatrixXd aeq(p, n_full);
    Eigen::VectorXd beq(p);
    for (int i = 0; i < p; ++i) {
      aeq.row(i) = program.equalities()[i].a.transpose();
      beq(i) = program.equalities()[i].b;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(aeq);
    red.xp = cod.solve(beq);
    if ((aeq * red.xp - beq).lpNorm<Eigen::Infinity>() >
        1e-9 * (1.0 + beq.lpNorm<Eigen::Infinity>())) {
      return finish(SolveStatus::infeasible);  // inconsistent equalities
    }
    const int rank = static_cast<int>(cod.rank());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aeq.transpose());
    Eigen::MatrixXd qfull = qr.householderQ();
    red.Z = qfull.rightCols(n_full - rank);
    red.active = true;
    if (red.Z.cols() == 0) {
      // Fully determined point; nothing to optimize.
      report.x = red.xp;
      report.kkt_residual = 0.0;
      const double viol = program.max_violation(red.xp);
      return finish(viol <= 1e-7 ? SolveStatus::optimal : SolveStatus::infeasible);
    }
  }

  // Assemble the normal-form model (in y space when reducing).
  Model m2;
  const auto to_model_vec = [&](const Eigen::VectorXd& a) -> Eigen::VectorXd {
    return red.active ? Eigen::VectorXd(red.Z.transpose() * a) : a;
  };
  m2.n = red.active ? static_cast<int>(red.Z.cols()) : n_full;
  m2.c0 = Eigen::VectorXd::Zero(m2.n);
  const auto& obj = program.objective();
  switch (obj.kind) {
    case ObjectiveKind::maximize_linear:
      m2.c0 = -to_model_vec(obj.linear);
      break;
    case ObjectiveKind::maximize_mean_log: {
      m2.log_weight = 1.0 / static_cast<double>(obj.mean_vars.size());
      for (int v : obj.mean_vars) {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(n_full);
        unit(v) = 1.0;
        m2.logs.push_back({to_model_vec(unit), red.active ? red.xp(v) : 0.0});
      }
      break;
    }
    case ObjectiveKind::maximize_geometric_mean:
      return finish(SolveStatus::numerical_failure);  // unreachable after encoding
  }

  if (!red.active) {
    m2.ineqs = program.inequalities();
    m2.quads = program.quadratics();
    m2.socs = program.socs();
    m2.lb = program.lower_bounds();
    m2.ub = program.upper_bounds();
  } else {
    // Constraints pulled back through x = xp + Z y; boxes become rows.
    for (const auto& c : program.inequalities()) {
      m2.ineqs.push_back({to_model_vec(c.a), c.b - c.a.dot(red.xp)});
    }
    for (const auto& q : program.quadratics()) {
      const Eigen::VectorXd qxp = q.Q * red.xp;
      m2.quads.push_back({red.Z.transpose() * q.Q * red.Z,
                          to_model_vec(Eigen::VectorXd(2.0 * qxp + q.a)),
                          q.b + red.xp.dot(qxp) + q.a.dot(red.xp)});
    }
    for (const auto& s : program.socs()) {
      m2.socs.push_back({s.A * red.Z, s.b + s.A * red.xp, to_model_vec(s.c),
                         s.d + s.c.dot(red.xp)});
    }
    m2.lb = Eigen::VectorXd::Constant(m2.n, -ConeProgram::kInf);
    m2.ub = Eigen::VectorXd::Constant(m2.n, ConeProgram::kInf);
    for (int i = 0; i < n_full; ++i) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(n_full);
      unit(i) = 1.0;
      const Eigen::VectorXd zrow = to_model_vec(unit);
      if (std::isfinite(program.lower_bounds()(i))) {
        m2.ineqs.push_back({-zrow, red.xp(i) - program.lower_bounds()(i)});
      }
      if (std::isfinite(program.upper_bounds()(i))) {
        m2.ineqs.push_back({zrow, program.upper_bounds()(i) - red.xp(i)});
      }
    }
  }

  // Starting point: warm start when usable, else the seed baked into the
  // program (an SCA expansion point sits at tiny violation, which keeps the
  // feasibility phase short), else box-centered default.
  const Eigen::VectorXd* seed = nullptr;
  if (options.warm_start && options.warm_start->size() == n_full) {
    seed = &*options.warm_start;
  } else if (program.initial_guess() && program.initial_guess()->size() == n_full) {
    seed = &*program.initial_guess();
  }
  Eigen::VectorXd x;
  bool have_start = false;
  if (seed != nullptr) {
    Eigen::VectorXd cand =
        red.active ? Eigen::VectorXd(red.Z.transpose() * (*seed - red.xp)) : *seed;
    if (in_domain(m2, cand, 1e-11)) {
      x = cand;
      have_start = true;
    } else {
      clamp_into_boxes(m2, cand);
      if (cand.allFinite()) {
        x = cand;  // seeds the feasibility phase below
        have_start = in_domain(m2, x, 1e-11);
      }
    }
  }
  if (x.size() == 0) x = default_start(m2);
  if (!have_start) have_start = in_domain(m2, x, 1e-9);

  int used = 0;
  if (!have_start) {
    Model m1 = make_phase1(m2);
    Eigen::VectorXd x1(m1.n);
    x1.head(m2.n) = x;
    clamp_into_boxes(m1, x1);
    x1(m1.slack) = std::max(max_relaxable_violation(m2, x1.head(m2.n)), 0.0) + 1.0;

    const LoopExit exit1 = barrier_loop(m1, x1, 1e-9, options.max_iter, used);
    switch (exit1) {
      case LoopExit::early_slack:
        break;  // safely interior
      case LoopExit::gap_reached:
        if (x1(m1.slack) > -1e-9) {
          report.iterations = used;
          return finish(SolveStatus::infeasible);
        }
        break;
      case LoopExit::budget:
        report.iterations = used;
        return finish(SolveStatus::max_iterations);
      case LoopExit::diverged:
      case LoopExit::stuck:
      case LoopExit::bad_numerics:
        report.iterations = used;
        return finish(SolveStatus::numerical_failure);
    }
    x = x1.head(m2.n);
    if (!in_domain(m2, x, 0.0)) {
      report.iterations = used;
      return finish(SolveStatus::numerical_failure);
    }
  }

  const LoopExit exit2 = barrier_loop(m2, x, options.tol, options.max_iter, used);
  report.iterations = used;
  report.x = red.active ? Eigen::VectorXd(red.xp + red.Z * x) : x;

  // Objective on the original (maximize) scale.
  switch (program.objective().kind) {
    case ObjectiveKind::maximize_linear:
      report.objective_value = program.objective().linear.dot(report.x);
      break;
    case ObjectiveKind::maximize_mean_log: {
      double acc = 0.0;
      for (int v : program.objective().mean_vars) acc += std::log(report.x(v));
      report.objective_value =
          std::exp(acc / static_cast<double>(program.objective().mean_vars.size()));
      break;
    }
    default:
      break;
  }

  switch (exit2) {
    case LoopExit::diverged:
      return finish(SolveStatus::unbounded);
    case LoopExit::budget:
      return finish(SolveStatus::max_iterations);
    case LoopExit::stuck:
    case LoopExit::bad_numerics:
      return finish(SolveStatus::numerical_failure);
    case LoopExit::early_slack:  // impossible in phase II (no slack)
    case LoopExit::gap_reached:
      break;
  }

  // Certify before claiming optimality, at the exact t the path landed on.
  const int degree = m2.barrier_degree();
  const double t_final = degree > 0 ? static_cast<double>(degree) / options.tol : 1.0;
  double value = 0.0;
  Eigen::VectorXd grad(m2.n);
  Eigen::MatrixXd hess(m2.n, m2.n);
  psi_derivs(m2, x, t_final, value, grad, hess);
  const double gap = degree > 0 ? static_cast<double>(degree) / t_final : 0.0;
  report.kkt_residual = std::max(gap, grad.lpNorm<Eigen::Infinity>() / t_final);

  const double violation = program.max_violation(report.x);
  if (report.kkt_residual > 1e-6 || violation > 1e-7) {
    return finish(SolveStatus::numerical_failure);
  }
  return finish(SolveStatus::optimal);
}

}  // namespace risopt
