#include "risopt/lift.hpp"

#include "risopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_user(int k, const ChannelSet& channels, const Eigen::VectorXd& sigma2) {
  require(k >= 0 && k < channels.num_users(), "lift: user index out of range");
  require(sigma2.size() == channels.num_users() && sigma2(k) > 0.0,
          "lift: sigma2 inconsistent with channels");
}

}  // namespace

void AlphaLift::validate() const {
  const auto n = alpha.size();
  require(n > 0 && n % 2 == 0, "AlphaLift: length must be even");
  const auto m = n / 2;
  for (Eigen::Index i = 0; i < m; ++i) {
    require(std::hypot(alpha(i), alpha(m + i)) <= 1.0 + 1e-9,
            "AlphaLift: element modulus exceeds 1");
  }
}

void SphericalAngles::validate() const {
  require(!theta.empty(), "SphericalAngles: empty");
  for (const auto& t : theta) {
    const auto last = t.size() - 1;
    require(last >= 0, "SphericalAngles: empty angle vector");
    require((t.head(last).array().abs() <= kPi / 2 + 1e-9).all(),
            "SphericalAngles: interior angle outside [-pi/2, pi/2]");
    require(std::abs(t(last)) <= kPi + 1e-9, "SphericalAngles: last angle outside [-pi, pi]");
  }
}

AlphaLift lift_f(const RisVector& f) {
  const auto m = f.f.size();
  AlphaLift lifted;
  lifted.alpha.resize(2 * m);
  lifted.alpha.head(m) = f.f.real();
  lifted.alpha.tail(m) = f.f.imag();
  return lifted;
}

RisVector unlift_alpha(const AlphaLift& lifted) {
  const auto n = lifted.alpha.size();
  require(n % 2 == 0, "unlift_alpha: odd length");
  const auto m = n / 2;
  RisVector f;
  f.f.resize(m);
  f.f.real() = lifted.alpha.head(m);
  f.f.imag() = lifted.alpha.tail(m);
  return f;
}

Eigen::VectorXd lift_w(const Eigen::VectorXcd& w) {
  Eigen::VectorXd beta(2 * w.size());
  beta.head(w.size()) = w.real();
  beta.tail(w.size()) = w.imag();
  return beta;
}

Eigen::VectorXcd unlift_beta(const Eigen::VectorXd& beta) {
  require(beta.size() % 2 == 0, "unlift_beta: odd length");
  const auto n = beta.size() / 2;
  Eigen::VectorXcd w(n);
  w.real() = beta.head(n);
  w.imag() = beta.tail(n);
  return w;
}

Eigen::MatrixXd build_A(int k, const ChannelSet& channels, const BeamformerSet& W,
                        const Eigen::VectorXd& sigma2) {
  check_user(k, channels, sigma2);
  require(W.users() == channels.num_users() && W.w[k].size() == channels.H[k].rows(),
          "build_A: beamformer shape mismatch");
  // Row vector v = w_k^H H_k / sigma_k; |v f|^2 = ||A alpha||^2.
  const Eigen::RowVectorXcd v =
      (W.w[k].adjoint() * channels.H[k]) / std::sqrt(sigma2(k));
  const auto m = v.size();
  Eigen::MatrixXd a_mat(2, 2 * m);
  a_mat.row(0).head(m) = v.real();
  a_mat.row(0).tail(m) = -v.imag();
  a_mat.row(1).head(m) = v.imag();
  a_mat.row(1).tail(m) = v.real();
  return a_mat;
}

Eigen::MatrixXd build_B(int k, const ChannelSet& channels, const BeamformerSet& W,
                        const Eigen::VectorXd& sigma2) {
  const Eigen::MatrixXd a_mat = build_A(k, channels, W, sigma2);
  return a_mat.transpose() * a_mat;
}

Eigen::MatrixXd build_C(int k, const ChannelSet& channels, const RisVector& f,
                        const Eigen::VectorXd& sigma2) {
  check_user(k, channels, sigma2);
  require(f.f.size() == channels.H[k].cols(), "build_C: surface vector shape mismatch");
  // u = H_k f / sigma_k; |w^H u|^2 = ||C beta||^2 for beta = [Re w; Im w].
  const Eigen::VectorXcd u = (channels.H[k] * f.f) / std::sqrt(sigma2(k));
  const auto n = u.size();
  Eigen::MatrixXd c_mat(2, 2 * n);
  c_mat.row(0).head(n) = u.real().transpose();
  c_mat.row(0).tail(n) = u.imag().transpose();
  c_mat.row(1).head(n) = u.imag().transpose();
  c_mat.row(1).tail(n) = -u.real().transpose();
  return c_mat;
}

Eigen::MatrixXd build_D(int k, const ChannelSet& channels, const RisVector& f,
                        const Eigen::VectorXd& sigma2) {
  const Eigen::MatrixXd c_mat = build_C(k, channels, f, sigma2);
  return c_mat.transpose() * c_mat;
}

Eigen::VectorXd build_beta(const Eigen::VectorXd& theta) {
  const auto l = theta.size();  // 2N - 1
  require(l >= 1, "build_beta: empty angle vector");
  Eigen::VectorXd beta(l + 1);
  double prefix = 1.0;  // running product of cosines
  for (Eigen::Index n = 0; n < l; ++n) {
    beta(n) = prefix * std::sin(theta(n));
    prefix *= std::cos(theta(n));
  }
  beta(l) = prefix;
  return beta;
}

Eigen::VectorXd angles_from_beta(const Eigen::VectorXd& beta) {
  const auto size = beta.size();  // 2N
  require(size >= 2 && size % 2 == 0, "angles_from_beta: length must be even and >= 2");
  require(std::abs(beta.norm() - 1.0) <= 1e-6, "angles_from_beta: input not unit norm");
  const auto l = size - 1;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(l);
  double prefix = 1.0;
  for (Eigen::Index i = 0; i + 1 < l; ++i) {
    if (prefix < 1e-12) return theta;  // degenerate tail: any angles work, use 0
    const double s = std::clamp(beta(i) / prefix, -1.0, 1.0);
    theta(i) = std::asin(s);
    prefix *= std::cos(theta(i));
  }
  if (prefix < 1e-12) return theta;
  // Last two components trace a full circle of radius `prefix`.
  theta(l - 1) = std::atan2(beta(l - 1), beta(l));
  return theta;
}

Eigen::MatrixXd beta_jacobian(const Eigen::VectorXd& theta) {
  const auto l = theta.size();
  require(l >= 1, "beta_jacobian: empty angle vector");
  const Eigen::VectorXd s = theta.array().sin();
  const Eigen::VectorXd c = theta.array().cos();

  // beta_n is a product of single-angle factors; each partial derivative
  // swaps one factor for its derivative.  Products are formed directly so
  // zeros of cos() cause no trouble.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(l + 1, l);
  for (Eigen::Index n = 0; n <= l; ++n) {
    // Factors of beta_n: cos(theta_j) for j < n, then sin(theta_n) (absent
    // for the final component n == l).
    for (Eigen::Index i = 0; i <= std::min(n, l - 1); ++i) {
      double prod = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        prod *= (j == i) ? -s(j) : c(j);
      }
      if (n < l) prod *= (i == n) ? c(n) : s(n);
      jac(n, i) = prod;
    }
  }
  return jac;
}

std::vector<Eigen::MatrixXd> beta_second_partials(const Eigen::VectorXd& theta) {
  const auto l = theta.size();
  require(l >= 1, "beta_second_partials: empty angle vector");
  const Eigen::VectorXd s = theta.array().sin();
  const Eigen::VectorXd c = theta.array().cos();
  const Eigen::VectorXd beta = build_beta(theta);

  std::vector<Eigen::MatrixXd> second(l + 1);
  for (Eigen::Index n = 0; n <= l; ++n) {
    Eigen::MatrixXd& hn = second[static_cast<std::size_t>(n)];
    hn = Eigen::MatrixXd::Zero(l, l);
    const Eigen::Index active = std::min(n, l - 1);  // largest angle index in beta_n
    for (Eigen::Index i = 0; i <= active; ++i) {
      // Twice the same factor: sin'' = -sin, cos'' = -cos, so the second
      // partial is just -beta_n.
      hn(i, i) = -beta(n);
      for (Eigen::Index j = i + 1; j <= active; ++j) {
        double prod = 1.0;
        for (Eigen::Index t = 0; t < n; ++t) {
          prod *= (t == i || t == j) ? -s(t) : c(t);
        }
        if (n < l) prod *= (j == n) ? c(n) : s(n);  // j > i, so only j can hit n
        hn(i, j) = prod;
        hn(j, i) = prod;
      }
    }
  }
  return second;
}

double f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D) {
  const Eigen::VectorXd beta = build_beta(theta);
  require(D.rows() == beta.size() && D.cols() == beta.size(), "f_quadratic: D shape mismatch");
  return beta.dot(D * beta);
}

Eigen::VectorXd grad_f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D) {
  const auto l = theta.size();
  const Eigen::VectorXd beta = build_beta(theta);
  require(D.rows() == beta.size() && D.cols() == beta.size(),
          "grad_f_quadratic: D shape mismatch");
  const Eigen::MatrixXd jac = beta_jacobian(theta);

  // d/d theta_i of sum_{n,l} d_nl beta_n beta_l, accumulated entry by entry.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n <= l; ++n) {
      for (Eigen::Index m = 0; m <= l; ++m) {
        acc += D(n, m) * (jac(n, i) * beta(m) + beta(n) * jac(m, i));
      }
    }
    grad(i) = acc;
  }
  return grad;
}

Eigen::MatrixXd hessian_f_quadratic(const Eigen::VectorXd& theta, const Eigen::MatrixXd& D) {
  const auto l = theta.size();
  const Eigen::VectorXd beta = build_beta(theta);
  require(D.rows() == beta.size() && D.cols() == beta.size(),
          "hessian_f_quadratic: D shape mismatch");
  const Eigen::MatrixXd jac = beta_jacobian(theta);
  const std::vector<Eigen::MatrixXd> second = beta_second_partials(theta);

  // hess = 2 J' D J + 2 sum_n (D beta)_n * second[n]  (D symmetric).
  const Eigen::VectorXd d_beta = D * beta;
  Eigen::MatrixXd hess = 2.0 * jac.transpose() * D * jac;
  for (Eigen::Index n = 0; n <= l; ++n) {
    hess.noalias() += 2.0 * d_beta(n) * second[static_cast<std::size_t>(n)];
  }
  return 0.5 * (hess + hess.transpose());  // exact symmetry for downstream checks
}

double majorization_delta(const Eigen::MatrixXd& D, int N) {
  require(N >= 1 && D.rows() == 2 * N && D.cols() == 2 * N,
          "majorization_delta: D must be 2N x 2N");
  double diag = 0.0, off = 0.0;
  for (int n = 0; n < 2 * N; ++n) {
    diag += D(n, n);
    for (int m = n + 1; m < 2 * N; ++m) off += D(n, m);
  }
  return std::abs(4.0 * diag + 8.0 * off) * static_cast<double>(2 * N - 1);
}

double majorization_delta_abs(const Eigen::MatrixXd& D, int N) {
  require(N >= 1 && D.rows() == 2 * N && D.cols() == 2 * N,
          "majorization_delta_abs: D must be 2N x 2N");
  double diag = 0.0, off = 0.0;
  for (int n = 0; n < 2 * N; ++n) {
    diag += std::abs(D(n, n));
    for (int m = n + 1; m < 2 * N; ++m) off += std::abs(D(n, m));
  }
  return (4.0 * diag + 8.0 * off) * static_cast<double>(2 * N - 1);
}

}  // namespace risopt
