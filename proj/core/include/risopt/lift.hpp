#pragma once

#include "risopt/system.hpp"

#include <vector>

namespace risopt {

/* Real-valued reformulations.
 *
 * The surface vector f enters the rate expression only through
 * |w_k^H H_k f / sigma_k|^2.  Writing v = w_k^H H_k / sigma_k and stacking
 * alpha = [Re f; Im f] gives
 *
 *   w_k^H H_k f / sigma_k = [Re v, -Im v; Im v, Re v] alpha =: A_k alpha,
 *   |.|^2 = alpha' B_k alpha,   B_k = A_k' A_k  (PSD, rank <= 2).
 *
 * Symmetrically, with u = H_k f / sigma_k and beta = [Re w; Im w],
 *
 *   w_k^H u = [Re u', Im u'; Im u', -Re u'] beta =: C_k beta,
 *   |.|^2 = beta' D_k beta,   D_k = C_k' C_k  (PSD, rank <= 2).
 *
 * The unit-norm constraint on w is eliminated by spherical coordinates:
 * with L = 2N-1 angles,
 *
 *   beta_n = sin(theta_n) * prod_{j<n} cos(theta_j),   n = 1..L,
 *   beta_2N =               prod_{j<=L} cos(theta_j),
 *
 * so ||beta|| = 1 identically.  theta_i in [-pi/2, pi/2] for i < L and
 * theta_L in [-pi, pi] cover the whole sphere.
 */

// alpha = [Re f; Im f], length 2M.
struct AlphaLift {
  Eigen::VectorXd alpha;

  void validate() const;  // per-element modulus <= 1 + 1e-9
};

// Per-user spherical coordinates of the receive beamformers, each length
// 2N-1.  All but the last angle live in [-pi/2, pi/2]; the last in [-pi, pi].
struct SphericalAngles {
  std::vector<Eigen::VectorXd> theta;

  int users() const { return static_cast<int>(theta.size()); }
  void validate() const;
};

AlphaLift lift_f(const RisVector& f);
RisVector unlift_alpha(const AlphaLift& alpha);

Eigen::VectorXd lift_w(const Eigen::VectorXcd& w);    // beta = [Re w; Im w]
Eigen::VectorXcd unlift_beta(const Eigen::VectorXd& beta);

// The 2 x 2M factor A_k built from w_k^H H_k / sqrt(sigma2_k), so that
// A_k alpha = [Re; Im] of the scaled effective channel.
Eigen::MatrixXd build_A(int k, const ChannelSet& channels, const BeamformerSet& W,
                        const Eigen::VectorXd& sigma2);

// B_k = A_k' A_k; shape 2M x 2M, PSD, rank <= 2.
Eigen::MatrixXd build_B(int k, const ChannelSet& channels, const BeamformerSet& W,
                        const Eigen::VectorXd& sigma2);

// The 2 x 2N factor C_k built from H_k f / sqrt(sigma2_k).
Eigen::MatrixXd build_C(int k, const ChannelSet& channels, const RisVector& f,
                        const Eigen::VectorXd& sigma2);

// D_k = C_k' C_k; shape 2N x 2N, PSD, rank <= 2.
Eigen::MatrixXd build_D(int k, const ChannelSet& channels, const RisVector& f,
                        const Eigen::VectorXd& sigma2);

// Spherical cascade: theta (length 2N-1) -> unit vector beta (length 2N).
Eigen::VectorXd build_beta(const Eigen::VectorXd& theta);

// Inverse of build_beta on the unit sphere: sequential arcsine extraction,
// last coordinate pair resolved by atan2.  When a cosine prefix underflows
// below 1e-12 the remaining angles are set to 0 (any value is consistent
// there; zero keeps the map total and deterministic).
Eigen::VectorXd angles_from_beta(const Eigen::VectorXd& beta);

// J(n, i) = d beta_n / d theta_i, shape 2N x (2N-1).
Eigen::MatrixXd beta_jacobian(const Eigen::VectorXd& theta);

// Second partials d^2 beta_n / (d theta_i d theta_j); one symmetric
// (2N-1) x (2N-1) matrix per component n.
std::vector<Eigen::MatrixXd> beta_second_partials(const Eigen::VectorXd& theta);

// f(theta) = beta(theta)' D beta(theta), its gradient and Hessian in theta.
// The gradient is accumulated as the elementwise double sum over D entries
// (identical to the chain-rule form 2 J' D beta, which the tests cross-check).
double f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D);
Eigen::VectorXd grad_f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D);
Eigen::MatrixXd hessian_f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D);

// Curvature bound delta with delta*I +/- hessian_f_quadratic PSD, used as the
// majorization constant of the quadratic surrogates.
//
// majorization_delta is the signed-sum form |4 sum_n d_nn + 8 sum_{n<l} d_nl|
// * (2N-1).  Because D is a Gram matrix, the inner signed sum collapses to
// 4 * (1' D 1), which vanishes whenever the all-ones vector is orthogonal to
// the factor's range — a situation real channels do produce.  The absolute
// row-sum form majorization_delta_abs = (4 sum_n |d_nn| + 8 sum_{n<l} |d_nl|)
// * (2N-1) is a provable spectral bound (every beta factor and its first two
// derivatives have modulus <= 1, so |hess_ij| <= 4 sum_{n,l} |d_nl|, and the
// spectral radius is at most (2N-1) times the largest entry) and dominates
// the signed form, so it is the default used when assembling subproblems.
double majorization_delta(const Eigen::MatrixXd& D, int N);
double majorization_delta_abs(const Eigen::MatrixXd& D, int N);

}  // namespace risopt
