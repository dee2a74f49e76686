#include "risopt/surrogate.hpp"

#include "risopt/rng.hpp"

#include "risopt/system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Shared scaffolding for the three builders: block variables first, then r,
// then lambda, then (restoration only) the common QoS slack t.
SubproblemLayout make_layout(int block_dim, int num_users, SurrogateObjective objective) {
  SubproblemLayout layout;
  layout.block_dim = block_dim;
  layout.num_users = num_users;
  layout.r_offset = block_dim;
  layout.lambda_offset = block_dim + num_users;
  layout.num_vars = block_dim + 2 * num_users;
  if (objective == SurrogateObjective::qos_restore) {
    layout.slack_index = layout.num_vars;
    layout.num_vars += 1;
  }
  return layout;
}

// r/lambda bounds and the objective, identical across the three blocks.
// sum_rate: r_k >= 1 + gamma_th boxes, maximize geomean(r).
// qos_restore: r_k >= 1 + gamma_th + t rows with t <= 1, maximize t.
void finish_common(ConeProgram& prog, const SubproblemLayout& layout, double gamma_th,
                   SurrogateObjective objective) {
  for (int k = 0; k < layout.num_users; ++k) {
    prog.set_lower_bound(layout.lambda_index(k), 1.0);
  }
  if (objective == SurrogateObjective::sum_rate) {
    std::vector<int> r_vars;
    for (int k = 0; k < layout.num_users; ++k) {
      prog.set_lower_bound(layout.r_index(k), 1.0 + gamma_th);
      r_vars.push_back(layout.r_index(k));
    }
    prog.set_maximize_geometric_mean(r_vars);
  } else {
    for (int k = 0; k < layout.num_users; ++k) {
      prog.set_lower_bound(layout.r_index(k), 1.0);  // r proxies 1 + SINR >= 1
      Eigen::VectorXd row = Eigen::VectorXd::Zero(layout.num_vars);
      row(layout.slack_index) = 1.0;
      row(layout.r_index(k)) = -1.0;
      prog.add_inequality(row, -(1.0 + gamma_th));  // t - r_k <= -(1 + gamma_th)
    }
    prog.set_lower_bound(layout.slack_index, -10.0 * (1.0 + gamma_th));
    prog.set_upper_bound(layout.slack_index, 1.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(layout.num_vars);
    c(layout.slack_index) = 1.0;
    prog.set_maximize_linear(c);
  }
}

// Bake the expansion point into the program as the solver's seed.  Every
// surrogate row is tight (or nearly so) there, so the feasibility phase
// starts at negligible violation instead of walking a slack down from a
// box-centered default — the dominant cost of a cold subproblem solve.
void seed_from_expansion(Subproblem& sp, const Eigen::VectorXd& block,
                         const ExpansionPoint& expansion, double gamma_th,
                         SurrogateObjective objective) {
  const SubproblemLayout& layout = sp.layout;
  Eigen::VectorXd guess(layout.num_vars);
  guess.head(layout.block_dim) = block;
  const double r_floor = objective == SurrogateObjective::sum_rate ? 1.0 + gamma_th : 1.0;
  for (int k = 0; k < layout.num_users; ++k) {
    guess(layout.r_index(k)) = std::max(expansion.r_prev(k), r_floor);
    guess(layout.lambda_index(k)) = std::max(expansion.lambda_prev(k), 1.0);
  }
  if (layout.slack_index >= 0) {
    const double reach =
        guess.segment(layout.r_offset, layout.num_users).minCoeff() - (1.0 + gamma_th);
    guess(layout.slack_index) = std::clamp(reach, -10.0 * (1.0 + gamma_th), 1.0);
  }
  sp.program.set_initial_guess(guess);
}

// Quadratic + linear pieces of h(r_k, lambda_k; expansion) as they land in a
// constraint over the subproblem variables.
struct HPieces {
  double r_coef, lambda_coef, constant;
};

HPieces h_pieces(double r_prev, double lambda_prev) {
  const double d0 = r_prev - lambda_prev;
  return {-0.5 * d0, 0.5 * d0 - 1.0, 0.25 * d0 * d0};
}

}  // namespace

void ExpansionPoint::validate(double gamma_th) const {
  const auto k = r_prev.size();
  require(k > 0 && lambda_prev.size() == k, "ExpansionPoint: r/lambda length mismatch");
  require(theta_prev.empty() || static_cast<Eigen::Index>(theta_prev.size()) == k,
          "ExpansionPoint: theta count mismatch");
  require((r_prev.array() >= 1.0 + gamma_th - 1e-9).all(),
          "ExpansionPoint: r_prev below 1 + gamma_th");
  require((lambda_prev.array() >= 1.0 - 1e-9).all(), "ExpansionPoint: lambda_prev below 1");
}

AffineForm g_lower_bound(const Eigen::VectorXd& alpha_prev, const Eigen::MatrixXd& B) {
  require(B.rows() == alpha_prev.size() && B.cols() == alpha_prev.size(),
          "g_lower_bound: shape mismatch");
  AffineForm form;
  form.anchor = alpha_prev;
  form.gradient = 2.0 * (B * alpha_prev);
  form.constant = alpha_prev.dot(B * alpha_prev);
  return form;
}

double h_upper_bound(double r, double lambda, double r_prev, double lambda_prev) {
  const auto [cr, cl, c0] = h_pieces(r_prev, lambda_prev);
  return 0.25 * (r + lambda) * (r + lambda) + cr * r + cl * lambda + c0;
}

double m1_surrogate(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prev,
                    const Eigen::MatrixXd& D, double delta) {
  require(theta.size() == theta_prev.size(), "m1_surrogate: theta length mismatch");
  const Eigen::VectorXd step = theta - theta_prev;
  return f_quadratic(theta_prev, D) + grad_f_quadratic(theta_prev, D).dot(step) +
         0.5 * delta * step.squaredNorm();
}

double m2_surrogate(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_prev,
                    const Eigen::MatrixXd& D, double delta) {
  require(theta.size() == theta_prev.size(), "m2_surrogate: theta length mismatch");
  const Eigen::VectorXd step = theta - theta_prev;
  return -f_quadratic(theta_prev, D) - grad_f_quadratic(theta_prev, D).dot(step) +
         0.5 * delta * step.squaredNorm();
}

ExpansionPoint make_expansion(const ChannelSet& channels, const RisVector& f,
                              const BeamformerSet& W, const PowerAllocation& p,
                              const Eigen::VectorXd& sigma2, double gamma_th) {
  const int k_users = channels.num_users();
  ExpansionPoint e;
  e.alpha_prev = lift_f(f).alpha;
  e.p_prev = p.p;
  e.theta_prev.reserve(k_users);
  e.r_prev.resize(k_users);
  e.lambda_prev.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    e.theta_prev.push_back(angles_from_beta(lift_w(W.w[k])));
    const double gain = std::norm(W.w[k].dot(channels.H[k] * f.f)) / sigma2(k);
    const double inr = (p.p.sum() - p.p(k)) * gain;  // interference-to-noise ratio
    e.lambda_prev(k) = inr + 1.0;
    const double s = p.p(k) * gain / (inr + 1.0);
    e.r_prev(k) = std::max(1.0 + s, 1.0 + gamma_th);
  }
  return e;
}

Subproblem build_p2(const ChannelSet& channels, const BeamformerSet& W,
                    const PowerAllocation& p, const Eigen::VectorXd& sigma2, double gamma_th,
                    const ExpansionPoint& expansion, SurrogateObjective objective) {
  const int k_users = channels.num_users();
  const int m2 = static_cast<int>(expansion.alpha_prev.size());
  require(m2 == 2 * channels.geometry.ris_elements, "build_p2: alpha_prev length mismatch");
  expansion.validate(gamma_th);

  const SubproblemLayout layout = make_layout(m2, k_users, objective);
  Subproblem sp{ConeProgram(layout.num_vars), layout};
  ConeProgram& prog = sp.program;

  for (int k = 0; k < k_users; ++k) {
    const Eigen::MatrixXd a_fact = build_A(k, channels, W, sigma2);  // 2 x 2M
    const auto [cr, cl, c0] = h_pieces(expansion.r_prev(k), expansion.lambda_prev(k));

    // C1: h(r_k, lambda_k) - p_k * (Taylor minorant of alpha'B alpha) <= 0.
    {
      const Eigen::VectorXd b_alpha0 =
          a_fact.transpose() * (a_fact * expansion.alpha_prev);  // B alpha_prev
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(1, layout.num_vars);
      gram(0, layout.r_index(k)) = 0.5;
      gram(0, layout.lambda_index(k)) = 0.5;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      a.head(m2) = -2.0 * p.p(k) * b_alpha0;
      a(layout.r_index(k)) = cr;
      a(layout.lambda_index(k)) = cl;
      const double b = c0 + p.p(k) * expansion.alpha_prev.dot(b_alpha0);
      prog.add_quadratic_gram(gram, a, b);
    }

    // C2: (sum_{i != k} p_i) * alpha'B alpha + 1 - lambda_k <= 0 (exact).
    const double other_power = p.p.sum() - p.p(k);
    if (other_power > 0.0) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2, layout.num_vars);
      gram.leftCols(m2) = std::sqrt(other_power) * a_fact;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      a(layout.lambda_index(k)) = -1.0;
      prog.add_quadratic_gram(gram, a, 1.0);
    }
  }

  // Per-element transmissive modulus: alpha_m^2 + alpha_{M+m}^2 <= 1.
  const int m_half = m2 / 2;
  for (int m = 0; m < m_half; ++m) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(2, layout.num_vars);
    gram(0, m) = 1.0;
    gram(1, m_half + m) = 1.0;
    prog.add_quadratic_gram(gram, Eigen::VectorXd::Zero(layout.num_vars), -1.0);
  }

  finish_common(prog, layout, gamma_th, objective);
  seed_from_expansion(sp, expansion.alpha_prev, expansion, gamma_th, objective);
  return sp;
}

Subproblem build_p3(const ChannelSet& channels, const RisVector& f, const PowerAllocation& p,
                    const Eigen::VectorXd& sigma2, double gamma_th,
                    const ExpansionPoint& expansion, SurrogateObjective objective,
                    DeltaRule delta_rule) {
  const int k_users = channels.num_users();
  const int n_rx = channels.geometry.user_antennas;
  const int angles = 2 * n_rx - 1;
  require(static_cast<int>(expansion.theta_prev.size()) == k_users,
          "build_p3: theta_prev count mismatch");
  expansion.validate(gamma_th);

  const SubproblemLayout layout = make_layout(k_users * angles, k_users, objective);
  Subproblem sp{ConeProgram(layout.num_vars), layout};
  ConeProgram& prog = sp.program;

  for (int k = 0; k < k_users; ++k) {
    const Eigen::VectorXd& theta0 = expansion.theta_prev[k];
    require(theta0.size() == angles, "build_p3: theta_prev length mismatch");
    const int off = k * angles;
    const Eigen::MatrixXd d_mat = build_D(k, channels, f, sigma2);
    const double delta = (delta_rule == DeltaRule::abs_sum)
                             ? majorization_delta_abs(d_mat, n_rx)
                             : majorization_delta(d_mat, n_rx);
    const double f0 = f_quadratic(theta0, d_mat);
    const Eigen::VectorXd g0 = grad_f_quadratic(theta0, d_mat);
    const auto [cr, cl, c0] = h_pieces(expansion.r_prev(k), expansion.lambda_prev(k));

    // C1: h(r_k, lambda_k) + p_k * m2(theta_k) <= 0.
    {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(1 + angles, layout.num_vars);
      gram(0, layout.r_index(k)) = 0.5;
      gram(0, layout.lambda_index(k)) = 0.5;
      const double w = std::sqrt(0.5 * p.p(k) * delta);
      for (int i = 0; i < angles; ++i) gram(1 + i, off + i) = w;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      a.segment(off, angles) = p.p(k) * (-g0 - delta * theta0);
      a(layout.r_index(k)) = cr;
      a(layout.lambda_index(k)) = cl;
      const double b =
          c0 + p.p(k) * (-f0 + g0.dot(theta0) + 0.5 * delta * theta0.squaredNorm());
      prog.add_quadratic_gram(gram, a, b);
    }

    // C2: (sum_{i != k} p_i) * m1(theta_k) + 1 - lambda_k <= 0.
    const double other_power = p.p.sum() - p.p(k);
    if (other_power > 0.0) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(angles, layout.num_vars);
      const double w = std::sqrt(0.5 * other_power * delta);
      for (int i = 0; i < angles; ++i) gram(i, off + i) = w;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      a.segment(off, angles) = other_power * (g0 - delta * theta0);
      a(layout.lambda_index(k)) = -1.0;
      const double b =
          other_power * (f0 - g0.dot(theta0) + 0.5 * delta * theta0.squaredNorm()) + 1.0;
      prog.add_quadratic_gram(gram, a, b);
    }

    // Angle boxes keep the spherical map invertible.
    for (int i = 0; i + 1 < angles; ++i) {
      prog.set_lower_bound(off + i, -kPi / 2);
      prog.set_upper_bound(off + i, kPi / 2);
    }
    prog.set_lower_bound(off + angles - 1, -kPi);
    prog.set_upper_bound(off + angles - 1, kPi);
  }

  finish_common(prog, layout, gamma_th, objective);
  Eigen::VectorXd theta_stack(layout.block_dim);
  for (int k = 0; k < k_users; ++k)
    theta_stack.segment(k * angles, angles) = expansion.theta_prev[k];
  seed_from_expansion(sp, theta_stack, expansion, gamma_th, objective);
  return sp;
}

Subproblem build_p4(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                    const Eigen::VectorXd& sigma2, double gamma_th, double total_power,
                    const ExpansionPoint& expansion, SurrogateObjective objective) {
  const int k_users = channels.num_users();
  require(total_power > 0.0, "build_p4: total_power must be > 0");
  expansion.validate(gamma_th);

  const SubproblemLayout layout = make_layout(k_users, k_users, objective);
  Subproblem sp{ConeProgram(layout.num_vars), layout};
  ConeProgram& prog = sp.program;

  // Solve in budget-normalized coordinates q = p / total: a watt-scale
  // budget (~1e-4) next to unit-scale rate rows gives the budget row a huge
  // dual, and the rounding noise of its barrier gradient then swamps the
  // optimality certificate.  In q units every row and dual is O(1).
  sp.block_scale = total_power;

  Eigen::VectorXd gain(k_users);  // total_power * |w_k^H H_k f|^2 / sigma2_k
  for (int k = 0; k < k_users; ++k) {
    gain(k) = total_power * std::norm(W.w[k].dot(channels.H[k] * f.f)) / sigma2(k);
  }

  for (int k = 0; k < k_users; ++k) {
    const auto [cr, cl, c0] = h_pieces(expansion.r_prev(k), expansion.lambda_prev(k));

    // C1: h(r_k, lambda_k) - gain_k * q_k <= 0.
    {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(1, layout.num_vars);
      gram(0, layout.r_index(k)) = 0.5;
      gram(0, layout.lambda_index(k)) = 0.5;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      a(k) = -gain(k);
      a(layout.r_index(k)) = cr;
      a(layout.lambda_index(k)) = cl;
      prog.add_quadratic_gram(gram, a, c0);
    }

    // C2: sum_{i != k} gain_k * q_i + 1 - lambda_k <= 0 (affine in q).
    if (k_users > 1) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.num_vars);
      for (int i = 0; i < k_users; ++i) {
        if (i != k) a(i) = gain(k);
      }
      a(layout.lambda_index(k)) = -1.0;
      prog.add_inequality(a, -1.0);
    }
  }

  // Budget and nonnegativity.
  Eigen::VectorXd budget = Eigen::VectorXd::Zero(layout.num_vars);
  budget.head(k_users).setOnes();
  prog.add_inequality(budget, 1.0);
  for (int k = 0; k < k_users; ++k) prog.set_lower_bound(k, 0.0);

  finish_common(prog, layout, gamma_th, objective);
  Eigen::VectorXd q_seed;
  if (expansion.p_prev.size() == k_users) {
    q_seed = (expansion.p_prev / total_power).cwiseMax(0.0).cwiseMin(1.0);
  } else {
    // Recover the allocation the expansion is tight at: the signal identity
    // gives gain_k * q_k = (r_k - 1) * lambda_k.
    q_seed.resize(k_users);
    for (int k = 0; k < k_users; ++k) {
      const double g = std::max(gain(k), 1e-12);
      q_seed(k) =
          std::clamp((expansion.r_prev(k) - 1.0) * expansion.lambda_prev(k) / g, 0.0, 1.0);
    }
  }
  seed_from_expansion(sp, q_seed, expansion, gamma_th, objective);
  return sp;
}

}  // namespace risopt
