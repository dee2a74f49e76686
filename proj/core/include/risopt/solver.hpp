#pragma once

#include "risopt/cone_program.hpp"

#include <optional>
#include <string>

namespace risopt {

// A log-barrier path-following interior-point method.  Small dense problems
// only (hundreds of variables), which is all the subproblems ever need; the
// ConeProgram contract keeps callers independent of this choice.

enum class SolveStatus { optimal, infeasible, max_iterations, numerical_failure, unbounded };

const char* to_string(SolveStatus status);

// Two equivalent handlings of the geometric-mean objective; both preserve
// the argmax.  mean_log swaps in (1/|G|) sum log x_g over the same variable
// space; soc_cascade builds a binary tree of rotated cones u^2 <= a*b with
// O(|G|) auxiliary variables and maximizes the root.
enum class GeomeanEncoding { mean_log, soc_cascade };

// Lower bound applied to geometric-mean variables by the mean_log encoding,
// so log stays defined.  Far below any real subproblem's r_k >= 1 + gamma_th.
inline constexpr double kGeomeanFloor = 1e-12;

struct SolveOptions {
  // Target duality-gap bound m/t for the barrier path.  The default leaves
  // 2x margin to the 1e-6 optimality certificate while keeping the final
  // barrier parameter small enough that active-constraint slacks (and with
  // them the certified gradient) are still computable in double precision.
  double tol = 5e-7;
  int max_iter = 2000;     // total Newton iterations across both phases
  std::optional<Eigen::VectorXd> warm_start;  // used when strictly feasible,
                                              // else seeds the feasibility phase
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;
  double objective_value = 0.0;  // geometric-mean scale for the mean objectives
  double kkt_residual = 0.0;
  int iterations = 0;
  double wall_time_ms = 0.0;
};

// Deterministic: identical (program, options) gives bitwise-identical x.
// status == optimal guarantees kkt_residual <= 1e-6 and every constraint
// violated by at most 1e-7 (both re-verified before reporting).
SolveReport solve(const ConeProgram& program, const SolveOptions& options = {});

// Rewrites a maximize_geometric_mean program into the chosen encoding.
// mean_log keeps the variable count; soc_cascade appends auxiliaries after
// the original variables, so x.head(original_n) is comparable across both.
ConeProgram encode_geometric_mean(const ConeProgram& program, const std::vector<int>& vars,
                                  GeomeanEncoding encoding);

}  // namespace risopt
