#pragma once

#include "risopt/cone_program.hpp"
#include "risopt/lift.hpp"

namespace risopt {

/* Convex surrogates for the per-user rate constraints.
 *
 * With auxiliary variables r_k (rate proxy, r_k - 1 <= SINR_k) and lambda_k
 * (interference-plus-noise proxy), each block subproblem carries two coupled
 * constraints per user:
 *
 *   C1:  r_k lambda_k - lambda_k <= p_k |w_k^H H_k f / sigma_k|^2
 *   C2:  sum_{i != k} p_i |w_k^H H_k f / sigma_k|^2 + 1 <= lambda_k
 *
 * The bilinear left side of C1 is replaced by its difference-of-convex
 * majorant h (from xy <= ((x+y)^2 - linearized (x-y)^2)/4); the quadratic
 * channel gain is replaced by the affine Taylor minorant g (surface block),
 * the quadratic majorants m1/m2 (beamformer block), or kept exact where it
 * is already affine (power block).  Every surrogate is tight at the
 * expansion point, so each feasible solution of a surrogate program is
 * feasible for the exact block problem and ascent follows.
 */

// Previous-iterate data all surrogates expand around.
struct ExpansionPoint {
  Eigen::VectorXd alpha_prev;                // 2M
  std::vector<Eigen::VectorXd> theta_prev;   // K vectors, 2N-1 each
  Eigen::VectorXd r_prev;                    // K, each >= 1 + gamma_th - 1e-9
  Eigen::VectorXd lambda_prev;               // K, each >= 1 - 1e-9
  Eigen::VectorXd p_prev;                    // K, allocation the point was built at

  void validate(double gamma_th) const;
};

// Affine form anchored at a point: value(x) = constant + gradient'(x - anchor).
struct AffineForm {
  double constant = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd anchor;

  double value(const Eigen::VectorXd& x) const {
    return constant + gradient.dot(x - anchor);
  }
};

// Taylor minorant of alpha' B alpha around alpha_prev: tight there and
// globally below by convexity.
AffineForm g_lower_bound(const Eigen::VectorXd& alpha_prev, const Eigen::MatrixXd& B);

// Majorant of r*lambda - lambda, tight at (r_prev, lambda_prev):
//   h = (r+lambda)^2/4 - (r0-l0)^2/4 - (r0-l0)((r-lambda)-(r0-l0))/2 - lambda.
double h_upper_bound(double r, double lambda, double r_prev, double lambda_prev);

// Quadratic majorants of +/- f(theta) = +/- beta(theta)' D beta(theta), both
// tight at theta_prev; delta must bound the Hessian spectrum (see lift.hpp).
double m1_surrogate(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prev,
                    const Eigen::MatrixXd& D, double delta);
double m2_surrogate(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prev,
                    const Eigen::MatrixXd& D, double delta);

// Which curvature constant the beamformer subproblem uses; abs_sum is the
// provable bound and the default, signed_sum the cancellation-prone form
// kept for comparison (see majorization_delta in lift.hpp).
enum class DeltaRule { abs_sum, signed_sum };

// sum_rate maximizes (prod r_k)^{1/K}; qos_restore instead maximizes a
// common slack t with r_k >= 1 + gamma_th + t (t <= 1), used to steer an
// infeasible starting point into the QoS region before the main loop.
enum class SurrogateObjective { sum_rate, qos_restore };

// Index map of a subproblem's decision vector: the block variables first
// (alpha, all theta_k concatenated, or p), then r, then lambda, then the
// restoration slack when present.
struct SubproblemLayout {
  int num_vars = 0;
  int block_dim = 0;
  int num_users = 0;
  int r_offset = 0;
  int lambda_offset = 0;
  int slack_index = -1;

  int r_index(int k) const { return r_offset + k; }
  int lambda_index(int k) const { return lambda_offset + k; }
};

struct Subproblem {
  ConeProgram program;
  SubproblemLayout layout;
  // Physical units per solver unit of the block variables.  The power block
  // solves in budget-normalized coordinates so that its rows and duals stay
  // O(1) regardless of how small the watt-scale budget is; block() converts
  // back to physical units.
  double block_scale = 1.0;

  Eigen::VectorXd block(const Eigen::VectorXd& x) const {
    return block_scale * x.head(layout.block_dim);
  }
  Eigen::VectorXd r(const Eigen::VectorXd& x) const {
    return x.segment(layout.r_offset, layout.num_users);
  }
  Eigen::VectorXd lambda(const Eigen::VectorXd& x) const {
    return x.segment(layout.lambda_offset, layout.num_users);
  }
};

// Expansion at the current iterate: alpha/theta from the lifts,
// r_k = max(1 + SINR_k, 1 + gamma_th), lambda_k = interference-to-noise
// ratio + 1 — the values at which all surrogates are tight.
ExpansionPoint make_expansion(const ChannelSet& channels, const RisVector& f,
                              const BeamformerSet& W, const PowerAllocation& p,
                              const Eigen::VectorXd& sigma2, double gamma_th);

// Surface block: variables (alpha, r, lambda).  C1 with g minorant, C2 exact
// (quadratic in alpha), per-element modulus balls, r/lambda lower bounds.
Subproblem build_p2(const ChannelSet& channels, const BeamformerSet& W,
                    const PowerAllocation& p, const Eigen::VectorXd& sigma2, double gamma_th,
                    const ExpansionPoint& expansion,
                    SurrogateObjective objective = SurrogateObjective::sum_rate);

// Beamformer block: variables (theta_1..theta_K, r, lambda).  C1 with m2,
// C2 with m1, angle boxes.
Subproblem build_p3(const ChannelSet& channels, const RisVector& f, const PowerAllocation& p,
                    const Eigen::VectorXd& sigma2, double gamma_th,
                    const ExpansionPoint& expansion,
                    SurrogateObjective objective = SurrogateObjective::sum_rate,
                    DeltaRule delta_rule = DeltaRule::abs_sum);

// Power block: variables (p, r, lambda).  Channel gains are constants, so C1
// and C2 are affine; budget row and p >= 0 boxes.
Subproblem build_p4(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                    const Eigen::VectorXd& sigma2, double gamma_th, double total_power,
                    const ExpansionPoint& expansion,
                    SurrogateObjective objective = SurrogateObjective::sum_rate);

}  // namespace risopt
