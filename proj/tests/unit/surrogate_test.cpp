#include "risopt/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

#include "risopt/solver.hpp"
#include "risopt/system.hpp"
#include "test_util.hpp"

using namespace risopt;
using testutil::manual_channels;
using testutil::random_f;
using testutil::random_p;
using testutil::random_theta;
using testutil::random_W;

namespace {

Eigen::MatrixXd random_psd(int dim, SplitMix64& rng) {
  Eigen::MatrixXd g(2, dim);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = rng.next_gaussian();
  Eigen::MatrixXd d = g.transpose() * g;
  return d / d.cwiseAbs().maxCoeff();
}

// Effective per-user channel gain |w_k^H H_k f|^2 / sigma2_k.
double norm_gain(int k, const ChannelSet& cs, const RisVector& f, const BeamformerSet& W,
                 const Eigen::VectorXd& sigma2) {
  const std::complex<double> v = W.w[k].adjoint() * cs.H[k] * f.f;
  return std::norm(v) / sigma2(k);
}

BeamformerSet beamformers_from(const Eigen::VectorXd& x, int users, int num_angles) {
  BeamformerSet W;
  for (int k = 0; k < users; ++k)
    W.w.push_back(unlift_beta(build_beta(x.segment(k * num_angles, num_angles))));
  return W;
}

}  // namespace

TEST_CASE("affine gain minorant is tight and below") {
  SplitMix64 rng(51);
  for (int t = 0; t < 50; ++t) {
    const int dim = 4 + 2 * static_cast<int>(rng.next_u64() % 3);
    const Eigen::MatrixXd B = random_psd(dim, rng);
    Eigen::VectorXd a0(dim);
    for (int i = 0; i < dim; ++i) a0(i) = rng.next_gaussian();
    const AffineForm form = g_lower_bound(a0, B);
    CHECK(form.value(a0) == doctest::Approx(a0.dot(B * a0)).epsilon(1e-12));
    for (int s = 0; s < 20; ++s) {
      Eigen::VectorXd a(dim);
      for (int i = 0; i < dim; ++i) a(i) = rng.next_gaussian();
      CHECK(form.value(a) <= a.dot(B * a) + 1e-10);
    }
  }
  SUBCASE("zero matrix gives the zero form") {
    const AffineForm form = g_lower_bound(Eigen::VectorXd::Ones(4), Eigen::MatrixXd::Zero(4, 4));
    CHECK(form.value(Eigen::VectorXd::Ones(4)) == 0.0);
    CHECK(form.value(Eigen::VectorXd::Random(4)) == 0.0);
  }
}

TEST_CASE("bilinear majorant is tight and above") {
  CHECK(h_upper_bound(2.0, 1.0, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h_upper_bound(3.0, 0.0, 3.0, 0.0) == doctest::Approx(0.0).epsilon(1e-14));

  SplitMix64 rng(52);
  for (int t = 0; t < 1000; ++t) {
    const double r0 = rng.next_uniform(1.0, 10.0);
    const double l0 = rng.next_uniform(1.0, 10.0);
    CHECK(h_upper_bound(r0, l0, r0, l0) ==
          doctest::Approx(r0 * l0 - l0).epsilon(1e-12));
    const double r = rng.next_uniform(1.0, 10.0);
    const double l = rng.next_uniform(1.0, 10.0);
    CHECK(h_upper_bound(r, l, r0, l0) >= r * l - l - 1e-10);
  }
}

TEST_CASE("quadratic majorants of the angle-domain gain are tight and above") {
  SplitMix64 rng(53);
  for (int t = 0; t < 100; ++t) {
    const int n_angles = 1 + 2 * static_cast<int>(rng.next_u64() % 2);  // 1 or 3
    const Eigen::MatrixXd D = random_psd(n_angles + 1, rng);
    const double delta = majorization_delta_abs(D, (n_angles + 1) / 2);
    const Eigen::VectorXd t0 = random_theta(n_angles, rng);
    const double f0 = f_quadratic(t0, D);
    CHECK(m1_surrogate(t0, t0, D, delta) == doctest::Approx(f0).epsilon(1e-12));
    CHECK(m2_surrogate(t0, t0, D, delta) == doctest::Approx(-f0).epsilon(1e-12));
    for (int s = 0; s < 10; ++s) {
      Eigen::VectorXd th = t0;
      for (int i = 0; i < n_angles; ++i) th(i) += rng.next_uniform(-0.5, 0.5);
      const double fv = f_quadratic(th, D);
      CHECK(m1_surrogate(th, t0, D, delta) >= fv - 1e-8);
      CHECK(m2_surrogate(th, t0, D, delta) >= -fv - 1e-8);
    }
  }
  SUBCASE("zero matrix, zero curvature") {
    const Eigen::VectorXd t0 = Eigen::VectorXd::Zero(3);
    CHECK(m1_surrogate(Eigen::VectorXd::Ones(3), t0, Eigen::MatrixXd::Zero(4, 4), 0.0) == 0.0);
  }
}

TEST_CASE("expansion point reproduces the rate quantities") {
  SplitMix64 rng(54);
  std::vector<Eigen::MatrixXcd> h;
  for (int k = 0; k < 3; ++k) h.push_back(testutil::random_cmat(2, 4, rng));
  const ChannelSet cs = manual_channels(std::move(h), 1.0);
  const RisVector f = random_f(4, rng);
  const BeamformerSet W = random_W(2, 3, rng);
  const PowerAllocation p = random_p(3, 2.0, rng);
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(3);
  const double gamma = 0.4;

  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
  CHECK_NOTHROW(exp.validate(gamma));
  CHECK((exp.alpha_prev - lift_f(f).alpha).cwiseAbs().maxCoeff() <= 1e-15);
  REQUIRE(static_cast<int>(exp.theta_prev.size()) == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK((build_beta(exp.theta_prev[k]) - lift_w(W.w[k])).cwiseAbs().maxCoeff() <= 1e-10);
    const double g = norm_gain(k, cs, f, W, sigma2);
    const double inr = (p.p.sum() - p.p(k)) * g;
    const double s = sinr(k, cs, f, W, p, sigma2);
    CHECK(exp.lambda_prev(k) == doctest::Approx(inr + 1.0).epsilon(1e-10));
    CHECK(exp.r_prev(k) == doctest::Approx(std::max(1.0 + s, 1.0 + gamma)).epsilon(1e-10));
  }

  ExpansionPoint bad = exp;
  bad.r_prev(0) = 1.0 + gamma - 1e-3;
  CHECK_THROWS_AS(bad.validate(gamma), std::invalid_argument);
}

TEST_CASE("subproblem layouts index the decision vector consistently") {
  SplitMix64 rng(55);
  std::vector<Eigen::MatrixXcd> h;
  for (int k = 0; k < 2; ++k) h.push_back(testutil::random_cmat(2, 3, rng));
  const ChannelSet cs = manual_channels(std::move(h), 1.0);
  const RisVector f = random_f(3, rng);
  const BeamformerSet W = random_W(2, 2, rng);
  const PowerAllocation p = random_p(2, 2.0, rng);
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);
  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, 0.1);

  const Subproblem p2 = build_p2(cs, W, p, sigma2, 0.1, exp);
  CHECK(p2.layout.block_dim == 6);           // 2M
  CHECK(p2.layout.num_users == 2);
  CHECK(p2.layout.num_vars == 6 + 4);        // alpha, r, lambda
  CHECK(p2.layout.slack_index == -1);
  CHECK(p2.layout.r_index(1) == p2.layout.r_offset + 1);
  CHECK(p2.program.num_vars() == p2.layout.num_vars);

  const Subproblem p3 = build_p3(cs, f, p, sigma2, 0.1, exp);
  CHECK(p3.layout.block_dim == 2 * 3);       // K * (2N-1)
  CHECK(p3.layout.num_vars == 6 + 4);

  const Subproblem p4 = build_p4(cs, f, W, sigma2, 0.1, 2.0, exp);
  CHECK(p4.layout.block_dim == 2);
  CHECK(p4.layout.num_vars == 2 + 4);

  const Subproblem res = build_p3(cs, f, p, sigma2, 0.1, exp, SurrogateObjective::qos_restore);
  CHECK(res.layout.slack_index == res.layout.num_vars - 1);
}

TEST_CASE("surface step with a single element reaches unit modulus in one solve") {
  // One element, one user: the lifted gain matrix is a scaled identity, so
  // the linearized program pushes alpha straight to the unit circle.
  const std::complex<double> c(2.0, 1.0);
  const ChannelSet cs = manual_channels({Eigen::MatrixXcd::Constant(1, 1, c)}, 1.0);
  const BeamformerSet W{{Eigen::VectorXcd::Ones(1)}};
  const PowerAllocation p{Eigen::VectorXd::Ones(1), 1.0};
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(1);
  RisVector f{Eigen::VectorXcd::Constant(1, std::complex<double>(0.5, 0.0))};
  const double gamma = 0.1;

  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
  const Subproblem sp = build_p2(cs, W, p, sigma2, gamma, exp);
  const SolveReport rep = solve(sp.program);
  REQUIRE(rep.status == SolveStatus::optimal);
  const RisVector fhat = unlift_alpha(AlphaLift{sp.block(rep.x)});
  CHECK(std::abs(fhat.f(0)) >= 1.0 - 1e-4);
  // K = 1: no interference, so the noise proxy sits at its lower bound.
  CHECK(sp.lambda(rep.x)(0) <= 1.0 + 1e-6);
  // and the SINR matches the 1-D amplitude grid oracle
  double best = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double a = static_cast<double>(i) / 1000.0;
    best = std::max(best, std::norm(c) * a * a);
  }
  const double achieved =
      std::norm(c) * std::norm(fhat.f(0)) / std::norm(std::complex<double>(1.0, 0.0));
  CHECK(achieved == doctest::Approx(best).epsilon(1e-3));
}

TEST_CASE("surface SCA ascends the exact sum rate") {
  SplitMix64 rng(56);
  for (int inst = 0; inst < 10; ++inst) {
    std::vector<Eigen::MatrixXcd> h;
    for (int k = 0; k < 2; ++k) h.push_back(testutil::random_cmat(2, 4, rng));
    const ChannelSet cs = manual_channels(std::move(h), 1.0);
    RisVector f = random_f(4, rng);
    const BeamformerSet W = random_W(2, 2, rng);
    const PowerAllocation p = random_p(2, 2.0, rng);
    const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);
    const double gamma = 0.0;  // every start is then admissible

    double prev = rate_report(cs, f, W, p, sigma2).sum_rate;
    for (int it = 0; it < 4; ++it) {
      const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
      const Subproblem sp = build_p2(cs, W, p, sigma2, gamma, exp);
      const SolveReport rep = solve(sp.program);
      REQUIRE(rep.status == SolveStatus::optimal);
      f = unlift_alpha(AlphaLift{sp.block(rep.x)});
      const double now = rate_report(cs, f, W, p, sigma2).sum_rate;
      CHECK(now >= prev - 1e-6);
      // surrogate feasibility implies exact per-user rate cover
      const Eigen::VectorXd r = sp.r(rep.x);
      for (int k = 0; k < 2; ++k)
        CHECK(sinr(k, cs, f, W, p, sigma2) >= (r(k) - 1.0) * (1.0 - 1e-6) - 1e-9);
      prev = now;
    }
  }
}

TEST_CASE("beamformer step is exact for a single receive antenna") {
  // N = 1: any unit w has |w^H u| = |u|, so the rate is angle-invariant and
  // one inner step must already match a dense circle grid.
  SplitMix64 rng(57);
  const ChannelSet cs = manual_channels({testutil::random_cmat(1, 2, rng)}, 1.0);
  const RisVector f = random_f(2, rng);
  const PowerAllocation p{Eigen::VectorXd::Ones(1), 1.0};
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(1);
  const double gamma = 0.0;
  BeamformerSet W = random_W(1, 1, rng);

  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
  const Subproblem sp = build_p3(cs, f, p, sigma2, gamma, exp);
  const SolveReport rep = solve(sp.program);
  REQUIRE(rep.status == SolveStatus::optimal);
  const BeamformerSet What = beamformers_from(rep.x, 1, 1);

  double grid_best = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double th = -kPi + 2.0 * kPi * static_cast<double>(i) / 10000.0;
    const BeamformerSet Wg{{unlift_beta(build_beta(Eigen::VectorXd::Constant(1, th)))}};
    grid_best = std::max(grid_best, sinr(0, cs, f, Wg, p, sigma2));
  }
  const double achieved = sinr(0, cs, f, What, p, sigma2);
  CHECK(std::abs(achieved - grid_best) <= 1e-3 * std::max(1.0, grid_best));
}

TEST_CASE("beamformer SCA reaches the matched filter for one user") {
  SplitMix64 rng(58);
  Eigen::MatrixXcd h = testutil::random_cmat(2, 3, rng);
  const ChannelSet cs = manual_channels({h}, 1.0);
  RisVector f = random_f(3, rng);
  // normalize the effective vector channel so curvature constants stay small
  const Eigen::VectorXcd u = h * f.f;
  f.f /= u.norm();
  const PowerAllocation p{Eigen::VectorXd::Ones(1), 1.0};
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(1);
  const double gamma = 0.0;
  BeamformerSet W = random_W(2, 1, rng);

  const double matched = p.p(0) * (h * f.f).squaredNorm() / sigma2(0);
  Eigen::VectorXd warm;
  double rhat = 0.0;
  for (int it = 0; it < 500; ++it) {
    const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
    const Subproblem sp = build_p3(cs, f, p, sigma2, gamma, exp);
    SolveOptions opts;
    if (warm.size() > 0) opts.warm_start = warm;
    const SolveReport rep = solve(sp.program, opts);
    REQUIRE(rep.status == SolveStatus::optimal);
    const double step =
        (sp.block(rep.x) - Eigen::VectorXd(exp.theta_prev[0])).norm();
    W = beamformers_from(rep.x, 1, 3);
    rhat = sp.r(rep.x)(0);
    warm = rep.x;
    if (step <= 1e-8) break;
  }
  const double achieved = sinr(0, cs, f, W, p, sigma2);
  CHECK(achieved == doctest::Approx(matched).epsilon(1e-3));
  CHECK(std::abs(rhat - (1.0 + achieved)) <= 1e-5 * (1.0 + achieved));
}

TEST_CASE("beamformer SCA ascends the exact sum rate") {
  SplitMix64 rng(59);
  for (int inst = 0; inst < 10; ++inst) {
    std::vector<Eigen::MatrixXcd> h;
    for (int k = 0; k < 2; ++k) h.push_back(testutil::random_cmat(2, 3, rng));
    const ChannelSet cs = manual_channels(std::move(h), 1.0);
    const RisVector f = random_f(3, rng);
    BeamformerSet W = random_W(2, 2, rng);
    const PowerAllocation p = random_p(2, 2.0, rng);
    const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);

    double prev = rate_report(cs, f, W, p, sigma2).sum_rate;
    for (int it = 0; it < 4; ++it) {
      const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, 0.0);
      const Subproblem sp = build_p3(cs, f, p, sigma2, 0.0, exp);
      const SolveReport rep = solve(sp.program);
      REQUIRE(rep.status == SolveStatus::optimal);
      W = beamformers_from(rep.x, 2, 3);
      const double now = rate_report(cs, f, W, p, sigma2).sum_rate;
      CHECK(now >= prev - 1e-6);
      prev = now;
    }
  }
}

TEST_CASE("power step saturates the budget for one user") {
  SplitMix64 rng(60);
  const ChannelSet cs = manual_channels({testutil::random_cmat(2, 3, rng)}, 1.0);
  const RisVector f = random_f(3, rng);
  const BeamformerSet W = random_W(2, 1, rng);
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(1);
  const double total = 2.0;
  PowerAllocation p{Eigen::VectorXd::Constant(1, 0.3), total};

  for (int it = 0; it < 5; ++it) {
    const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, 0.0);
    const Subproblem sp = build_p4(cs, f, W, sigma2, 0.0, total, exp);
    const SolveReport rep = solve(sp.program);
    REQUIRE(rep.status == SolveStatus::optimal);
    p.p = sp.block(rep.x);
    CHECK(sp.lambda(rep.x)(0) <= 1.0 + 1e-6);
  }
  CHECK(p.p(0) == doctest::Approx(total).epsilon(1e-5));
}

TEST_CASE("two-user power split matches a dense simplex grid") {
  // Scalar link per user, unequal gains: the sum rate over the power simplex
  // is evaluated exhaustively and must agree with the converged SCA answer.
  const ChannelSet cs = manual_channels({Eigen::MatrixXcd::Constant(1, 1, 1.0),
                                         Eigen::MatrixXcd::Constant(1, 1, 0.8)},
                                        1.0);
  const RisVector f{Eigen::VectorXcd::Ones(1)};
  const BeamformerSet W{{Eigen::VectorXcd::Ones(1), Eigen::VectorXcd::Ones(1)}};
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);
  const double total = 2.0;
  const double gamma = 0.1;
  PowerAllocation p{Eigen::VectorXd::Constant(2, total / 2.0), total};

  Eigen::VectorXd warm;
  for (int it = 0; it < 200; ++it) {
    const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
    const Subproblem sp = build_p4(cs, f, W, sigma2, gamma, total, exp);
    SolveOptions opts;
    if (warm.size() > 0) opts.warm_start = warm;
    const SolveReport rep = solve(sp.program, opts);
    REQUIRE(rep.status == SolveStatus::optimal);
    const Eigen::VectorXd step = sp.block(rep.x) - p.p;
    p.p = sp.block(rep.x);
    warm = rep.x;
    if (step.norm() <= 1e-9) break;
  }
  const double sca_rate = rate_report(cs, f, W, p, sigma2).sum_rate;

  // Exhaustive pass over the simplex, then a local refinement around the
  // coarse argmax: the optimum pins a QoS constraint, and a single-pass grid
  // snaps away from that boundary by more than the comparison tolerance.
  double grid_best = -1.0;
  Eigen::Vector2d grid_arg = Eigen::Vector2d::Zero();
  const int n = 400;
  const auto sweep = [&](double lo0, double hi0, double lo1, double hi1) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd q(2);
        q << lo0 + (hi0 - lo0) * i / (n - 1.0), lo1 + (hi1 - lo1) * j / (n - 1.0);
        if (q.minCoeff() < 0.0) continue;
        if (q.sum() > total * (1.0 + 1e-12)) continue;
        const PowerAllocation pg{q, total};
        if (sinr(0, cs, f, W, pg, sigma2) < gamma) continue;
        if (sinr(1, cs, f, W, pg, sigma2) < gamma) continue;
        const double rate = rate_report(cs, f, W, pg, sigma2).sum_rate;
        if (rate > grid_best) {
          grid_best = rate;
          grid_arg = q;
        }
      }
    }
  };
  sweep(0.0, total, 0.0, total);
  REQUIRE(grid_best > 0.0);
  const double h = 2.0 * total / (n - 1.0);
  sweep(grid_arg(0) - h, grid_arg(0) + h, grid_arg(1) - h, grid_arg(1) + h);
  CHECK(std::abs(sca_rate - grid_best) <= 1e-3);
  // and the SCA point respects the QoS floor exactly
  CHECK(sinr(0, cs, f, W, p, sigma2) >= gamma - 1e-7);
  CHECK(sinr(1, cs, f, W, p, sigma2) >= gamma - 1e-7);
}

TEST_CASE("an unreachable QoS floor renders the power block infeasible") {
  const ChannelSet cs = manual_channels({Eigen::MatrixXcd::Constant(1, 1, 1.0),
                                         Eigen::MatrixXcd::Constant(1, 1, 1.0)},
                                        1.0);
  const RisVector f{Eigen::VectorXcd::Ones(1)};
  const BeamformerSet W{{Eigen::VectorXcd::Ones(1), Eigen::VectorXcd::Ones(1)}};
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);
  const double gamma = 1e6;
  PowerAllocation p{Eigen::VectorXd::Ones(2), 2.0};
  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
  const Subproblem sp = build_p4(cs, f, W, sigma2, gamma, 2.0, exp);
  CHECK(solve(sp.program).status == SolveStatus::infeasible);
}

TEST_CASE("restoration objective lifts the worst QoS slack") {
  SplitMix64 rng(61);
  std::vector<Eigen::MatrixXcd> h;
  for (int k = 0; k < 2; ++k) h.push_back(testutil::random_cmat(2, 3, rng));
  const ChannelSet cs = manual_channels(std::move(h), 1.0);
  const RisVector f = random_f(3, rng);
  BeamformerSet W = random_W(2, 2, rng);
  const PowerAllocation p = random_p(2, 2.0, rng);
  const Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(2);
  // pick the threshold above the current worst user so the start violates QoS
  const double worst = std::min(sinr(0, cs, f, W, p, sigma2), sinr(1, cs, f, W, p, sigma2));
  const double gamma = worst * 1.5 + 0.05;

  const ExpansionPoint exp = make_expansion(cs, f, W, p, sigma2, gamma);
  const Subproblem sp = build_p3(cs, f, p, sigma2, gamma, exp, SurrogateObjective::qos_restore);
  const SolveReport rep = solve(sp.program);
  REQUIRE(rep.status == SolveStatus::optimal);
  const double that = rep.x(sp.layout.slack_index);
  CHECK(that <= 1.0 + 1e-9);
  W = beamformers_from(rep.x, 2, 3);
  const double worst_after =
      std::min(sinr(0, cs, f, W, p, sigma2), sinr(1, cs, f, W, p, sigma2));
  // the achieved slack certifies at least t-hat of headroom (minus tolerances)
  CHECK(worst_after - gamma >= that - 1e-6);
  CHECK(worst_after >= worst - 1e-9);
}
