#include "risopt/ao.hpp"

#include "risopt/channel.hpp"
#include "risopt/lift.hpp"
#include "risopt/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace risopt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

constexpr std::uint64_t kPhaseSalt = 0x504841534553ULL;  // surface-phase init stream

// How many full restoration sweeps to attempt before declaring the start
// point unrecoverable, and the slack level that counts as "inside QoS".
constexpr int kMaxRestoreRounds = 12;
constexpr double kQosSlackTol = 1e-9;

// A block update must not reduce the exact sum rate by more than this; the
// surrogate argument guarantees ascent in exact arithmetic, so anything
// larger indicates a numerical problem and the step is discarded.
constexpr double kAscentSlop = 1e-9;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double now_ms(const std::chrono::steady_clock::time_point& t0) {
  const auto d = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(d).count();
}

double min_qos_slack(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                     const PowerAllocation& p, const Eigen::VectorXd& sigma2, double gamma_th) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < channels.num_users(); ++k) {
    worst = std::min(worst, sinr(k, channels, f, W, p, sigma2) - gamma_th);
  }
  return worst;
}

RisVector surface_from(const Subproblem& sp, const Eigen::VectorXd& x) {
  return unlift_alpha(AlphaLift{sp.block(x)});
}

BeamformerSet beamformers_from(const Subproblem& sp, const Eigen::VectorXd& x, int num_users) {
  const Eigen::VectorXd block = sp.block(x);
  const int angles = sp.layout.block_dim / num_users;
  BeamformerSet W;
  W.w.reserve(num_users);
  for (int k = 0; k < num_users; ++k) {
    W.w.push_back(unlift_beta(build_beta(block.segment(k * angles, angles))));
  }
  return W;
}

// One restoration sweep over a single block: solve the slack-maximization
// variant and keep the result only if the exact worst QoS slack improved.
// Returns the (possibly unchanged) slack.
template <typename BuildFn, typename ApplyFn>
double restore_block(double slack, BuildFn&& build, ApplyFn&& apply) {
  Subproblem sp = build();
  const SolveReport rep = solve(sp.program);
  if (rep.status != SolveStatus::optimal) return slack;
  const double candidate = apply(sp, rep.x);
  return candidate > slack ? candidate : slack;
}

struct BlockOutcome {
  double objective = kNaN;  // last accepted subproblem optimum, NaN if none
  int iterations = 0;       // accepted SCA steps
};

// Inner SCA pass over the surface coefficients: re-expand, solve, accept
// while the exact sum rate does not regress, stop on a short step.
BlockOutcome improve_surface(const ChannelSet& channels, const AoConfig& config, RisVector& f,
                             const BeamformerSet& W, const PowerAllocation& p,
                             const Eigen::VectorXd& sigma2) {
  BlockOutcome out;
  std::optional<Eigen::VectorXd> warm;
  double current = rate_report(channels, f, W, p, sigma2).sum_rate;
  for (int it = 1; it <= config.max_inner_f; ++it) {
    const ExpansionPoint e = make_expansion(channels, f, W, p, sigma2, config.gamma_th);
    const Subproblem sp = build_p2(channels, W, p, sigma2, config.gamma_th, e);
    SolveOptions options;
    options.warm_start = warm;
    const SolveReport rep = solve(sp.program, options);
    if (rep.status != SolveStatus::optimal) break;
    const RisVector candidate = surface_from(sp, rep.x);
    const double cand_rate = rate_report(channels, candidate, W, p, sigma2).sum_rate;
    if (cand_rate + kAscentSlop < current) break;
    const double step = (sp.block(rep.x) - e.alpha_prev).norm();
    f = candidate;
    current = cand_rate;
    out.objective = rep.objective_value;
    out.iterations = it;
    warm = rep.x;
    if (step <= config.eps_f) break;
  }
  return out;
}

// Inner SCA pass over the beamformer angle blocks.
BlockOutcome improve_beamformers(const ChannelSet& channels, const AoConfig& config,
                                 const RisVector& f, BeamformerSet& W,
                                 const PowerAllocation& p, const Eigen::VectorXd& sigma2) {
  BlockOutcome out;
  const int num_users = channels.num_users();
  std::optional<Eigen::VectorXd> warm;
  double current = rate_report(channels, f, W, p, sigma2).sum_rate;
  for (int it = 1; it <= config.max_inner_w; ++it) {
    const ExpansionPoint e = make_expansion(channels, f, W, p, sigma2, config.gamma_th);
    const Subproblem sp =
        build_p3(channels, f, p, sigma2, config.gamma_th, e, SurrogateObjective::sum_rate,
                 config.delta_rule);
    SolveOptions options;
    options.warm_start = warm;
    const SolveReport rep = solve(sp.program, options);
    if (rep.status != SolveStatus::optimal) break;
    const BeamformerSet candidate = beamformers_from(sp, rep.x, num_users);
    const double cand_rate = rate_report(channels, f, candidate, p, sigma2).sum_rate;
    if (cand_rate + kAscentSlop < current) break;
    Eigen::VectorXd prev(sp.layout.block_dim);
    const int angles = sp.layout.block_dim / num_users;
    for (int k = 0; k < num_users; ++k) prev.segment(k * angles, angles) = e.theta_prev[k];
    const double step = (sp.block(rep.x) - prev).norm();
    W = candidate;
    current = cand_rate;
    out.objective = rep.objective_value;
    out.iterations = it;
    warm = rep.x;
    if (step <= config.eps_w) break;
  }
  return out;
}

// Single power solve (the power subproblem needs no SCA: with f and W fixed
// it is convex in p up to the one bilinear term already handled by h).
BlockOutcome improve_power(const ChannelSet& channels, const AoConfig& config,
                           const RisVector& f, const BeamformerSet& W, PowerAllocation& p,
                           const Eigen::VectorXd& sigma2, double total_power) {
  BlockOutcome out;
  const double current = rate_report(channels, f, W, p, sigma2).sum_rate;
  const ExpansionPoint e = make_expansion(channels, f, W, p, sigma2, config.gamma_th);
  const Subproblem sp =
      build_p4(channels, f, W, sigma2, config.gamma_th, total_power, e);
  const SolveReport rep = solve(sp.program);
  if (rep.status != SolveStatus::optimal) return out;
  PowerAllocation candidate{sp.block(rep.x), total_power};
  const double cand_rate = rate_report(channels, f, W, candidate, sigma2).sum_rate;
  if (cand_rate + kAscentSlop < current) return out;
  p = std::move(candidate);
  out.objective = rep.objective_value;
  out.iterations = 1;
  return out;
}

AoIterationRecord snapshot(int outer, const ChannelSet& channels, const RisVector& f,
                           const BeamformerSet& W, const PowerAllocation& p,
                           const Eigen::VectorXd& sigma2) {
  const RateReport rep = rate_report(channels, f, W, p, sigma2);
  AoIterationRecord rec;
  rec.outer = outer;
  rec.sum_rate = rep.sum_rate;
  rec.rate = rep.rate;
  rec.sinr = rep.sinr;
  rec.p2_objective = kNaN;
  rec.p3_objective = kNaN;
  rec.p4_objective = kNaN;
  return rec;
}

AoResult run_loop(const ChannelSet& channels, const AoConfig& config, double total_power,
                  const Eigen::VectorXd& sigma2, InitialPoint start, bool freeze_f,
                  bool freeze_p) {
  config.validate();
  channels.validate();
  require(total_power > 0.0, "run: total_power must be > 0");
  require(sigma2.size() == channels.num_users() && (sigma2.array() > 0.0).all(),
          "run: sigma2 must be positive with one entry per user");

  RisVector f = std::move(start.f);
  BeamformerSet W = std::move(start.W);
  PowerAllocation p = std::move(start.p);
  f.validate();
  W.validate();
  p.validate();
  require(f.size() == channels.geometry.ris_elements && W.users() == channels.num_users() &&
              p.users() == channels.num_users(),
          "run: initial point inconsistent with channels");

  const auto t0 = std::chrono::steady_clock::now();

  AoResult out;

  // Steer an out-of-QoS start into the feasible region by alternating
  // slack-maximization solves.  Block updates that do not improve the exact
  // worst slack are discarded, so the sweep cannot cycle.
  double slack = min_qos_slack(channels, f, W, p, sigma2, config.gamma_th);
  for (int round = 0; round < kMaxRestoreRounds && slack < -kQosSlackTol; ++round) {
    const double before = slack;
    if (!freeze_f && slack < -kQosSlackTol) {
      slack = restore_block(
          slack,
          [&] {
            const ExpansionPoint e =
                make_expansion(channels, f, W, p, sigma2, config.gamma_th);
            return build_p2(channels, W, p, sigma2, config.gamma_th, e,
                            SurrogateObjective::qos_restore);
          },
          [&](const Subproblem& sp, const Eigen::VectorXd& x) {
            const RisVector cand = surface_from(sp, x);
            const double s = min_qos_slack(channels, cand, W, p, sigma2, config.gamma_th);
            if (s > slack) f = cand;
            return s;
          });
    }
    if (slack < -kQosSlackTol) {
      slack = restore_block(
          slack,
          [&] {
            const ExpansionPoint e =
                make_expansion(channels, f, W, p, sigma2, config.gamma_th);
            return build_p3(channels, f, p, sigma2, config.gamma_th, e,
                            SurrogateObjective::qos_restore, config.delta_rule);
          },
          [&](const Subproblem& sp, const Eigen::VectorXd& x) {
            const BeamformerSet cand = beamformers_from(sp, x, channels.num_users());
            const double s = min_qos_slack(channels, f, cand, p, sigma2, config.gamma_th);
            if (s > slack) W = cand;
            return s;
          });
    }
    if (!freeze_p && slack < -kQosSlackTol) {
      slack = restore_block(
          slack,
          [&] {
            const ExpansionPoint e =
                make_expansion(channels, f, W, p, sigma2, config.gamma_th);
            return build_p4(channels, f, W, sigma2, config.gamma_th, total_power, e,
                            SurrogateObjective::qos_restore);
          },
          [&](const Subproblem& sp, const Eigen::VectorXd& x) {
            PowerAllocation cand{sp.block(x), total_power};
            const double s = min_qos_slack(channels, f, W, cand, sigma2, config.gamma_th);
            if (s > slack) p = std::move(cand);
            return s;
          });
    }
    if (slack <= before) break;  // no block improved: stalled
  }

  AoIterationRecord rec0 = snapshot(0, channels, f, W, p, sigma2);
  if (config.record_wall_time) rec0.wall_ms = now_ms(t0);
  out.trace.iterations.push_back(std::move(rec0));

  if (slack < -kQosSlackTol) {
    out.f = std::move(f);
    out.W = std::move(W);
    out.p = std::move(p);
    out.final_report = rate_report(channels, out.f, out.W, out.p, sigma2);
    out.status = AoStatus::infeasible;
    out.outer_iterations = 0;
    return out;
  }

  double prev_sum = out.trace.iterations.front().sum_rate;
  AoStatus status = AoStatus::max_iterations;
  int outers = 0;
  for (int outer = 1; outer <= config.max_outer; ++outer) {
    const auto t_iter = std::chrono::steady_clock::now();
    BlockOutcome surface;
    if (!freeze_f) surface = improve_surface(channels, config, f, W, p, sigma2);
    const BlockOutcome beams = improve_beamformers(channels, config, f, W, p, sigma2);
    BlockOutcome power;
    if (!freeze_p) power = improve_power(channels, config, f, W, p, sigma2, total_power);

    AoIterationRecord rec = snapshot(outer, channels, f, W, p, sigma2);
    rec.inner_f_iterations = surface.iterations;
    rec.inner_w_iterations = beams.iterations;
    rec.p2_objective = surface.objective;
    rec.p3_objective = beams.objective;
    rec.p4_objective = power.objective;
    if (config.record_wall_time) rec.wall_ms = now_ms(t_iter);
    const double sum = rec.sum_rate;
    out.trace.iterations.push_back(std::move(rec));
    outers = outer;
    if (std::abs(sum - prev_sum) <= config.eps_outer) {
      status = AoStatus::converged;
      break;
    }
    prev_sum = sum;
  }

  out.f = std::move(f);
  out.W = std::move(W);
  out.p = std::move(p);
  out.final_report = rate_report(channels, out.f, out.W, out.p, sigma2);
  out.status = status;
  out.outer_iterations = outers;
  return out;
}

}  // namespace

void AoConfig::validate() const {
  require(eps_outer > 0.0 && eps_f > 0.0 && eps_w > 0.0, "AoConfig: tolerances must be > 0");
  require(max_outer >= 1 && max_inner_f >= 1 && max_inner_w >= 1,
          "AoConfig: iteration caps must be >= 1");
  require(gamma_th >= 0.0, "AoConfig: gamma_th must be >= 0");
}

const char* to_string(AoStatus status) {
  switch (status) {
    case AoStatus::converged: return "converged";
    case AoStatus::max_iterations: return "max-iterations";
    case AoStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

InitialPoint initialize(const ChannelSet& channels, const AoConfig& config,
                        double total_power) {
  channels.validate();
  config.validate();
  require(total_power > 0.0, "initialize: total_power must be > 0");

  const int m = channels.geometry.ris_elements;
  const int num_users = channels.num_users();

  SplitMix64 rng(mix_seed(config.seed, kPhaseSalt));
  Eigen::VectorXcd fvec(m);
  for (int i = 0; i < m; ++i) {
    fvec(i) = std::polar(1.0, rng.next_uniform(0.0, 2.0 * kPi));
  }

  InitialPoint start;
  start.f = RisVector{std::move(fvec)};
  start.W.w.reserve(num_users);
  for (int k = 0; k < num_users; ++k) {
    Eigen::VectorXcd v = channels.H[k] * start.f.f;  // matched filter
    const double norm = v.norm();
    if (norm > 1e-30) {
      start.W.w.push_back(v / norm);
    } else {
      Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(channels.geometry.user_antennas);
      e1(0) = 1.0;
      start.W.w.push_back(std::move(e1));
    }
  }
  start.p = PowerAllocation{
      Eigen::VectorXd::Constant(num_users, total_power / num_users), total_power};
  return start;
}

AoResult run(const ChannelSet& channels, const AoConfig& config, double total_power,
             const Eigen::VectorXd& sigma2) {
  return run_loop(channels, config, total_power, sigma2,
                  initialize(channels, config, total_power), /*freeze_f=*/false,
                  /*freeze_p=*/false);
}

AoResult run_baseline(BaselineKind kind, const ChannelSet& channels, const AoConfig& config,
                      double total_power, const Eigen::VectorXd& sigma2) {
  switch (kind) {
    case BaselineKind::equal_power:
      return run_loop(channels, config, total_power, sigma2,
                      initialize(channels, config, total_power), /*freeze_f=*/false,
                      /*freeze_p=*/true);
    case BaselineKind::random_phase:
      return run_loop(channels, config, total_power, sigma2,
                      initialize(channels, config, total_power), /*freeze_f=*/true,
                      /*freeze_p=*/false);
    case BaselineKind::miso: {
      ArrayGeometry geometry = channels.geometry;
      geometry.user_antennas = 1;
      const ChannelSet miso =
          synthesize_channels(geometry, channels.params, channels.users, channels.seed);
      return run(miso, config, total_power, sigma2);
    }
  }
  throw std::invalid_argument("run_baseline: unknown baseline kind");
}

}  // namespace risopt
