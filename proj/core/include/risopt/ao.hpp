#pragma once

#include "risopt/solver.hpp"
#include "risopt/surrogate.hpp"
#include "risopt/system.hpp"

namespace risopt {

// The alternating loop: per outer iteration, an inner SCA pass over the
// surface coefficients (stopping on ||alpha step|| <= eps_f or max_inner_f),
// an inner SCA pass over the beamformer angles (||theta step|| <= eps_w or
// max_inner_w), then one power solve; outer stop when the sum-rate change
// drops below eps_outer or max_outer is hit.

struct AoConfig {
  double eps_outer = 1e-3;  // bits/s/Hz
  double eps_f = 1e-4;
  double eps_w = 1e-4;
  int max_outer = 30;
  int max_inner_f = 15;
  int max_inner_w = 15;
  double gamma_th = 0.1;
  std::uint64_t seed = 0;   // drives the random-phase surface initialization
  DeltaRule delta_rule = DeltaRule::abs_sum;
  bool record_wall_time = false;  // off by default: keeps traces byte-reproducible

  void validate() const;
};

enum class AoStatus { converged, max_iterations, infeasible };

const char* to_string(AoStatus status);

struct AoIterationRecord {
  int outer = 0;
  double sum_rate = 0.0;
  Eigen::VectorXd rate;
  Eigen::VectorXd sinr;
  int inner_f_iterations = 0;
  int inner_w_iterations = 0;
  // Subproblem objective values (geometric-mean scale); NaN where the block
  // was not solved (initial record, frozen baseline blocks).
  double p2_objective = 0.0;
  double p3_objective = 0.0;
  double p4_objective = 0.0;
  double wall_ms = 0.0;
};

struct AoTrace {
  std::vector<AoIterationRecord> iterations;  // entry 0 is the starting point
};

struct AoResult {
  RisVector f;
  BeamformerSet W;
  PowerAllocation p;
  AoTrace trace;
  RateReport final_report;
  AoStatus status = AoStatus::infeasible;
  int outer_iterations = 0;
};

struct InitialPoint {
  RisVector f;
  BeamformerSet W;
  PowerAllocation p;
};

// Unit-amplitude random-phase surface (seeded), matched-filter beamformers
// w_k = H_k f / ||H_k f||, equal power split.
InitialPoint initialize(const ChannelSet& channels, const AoConfig& config, double total_power);

AoResult run(const ChannelSet& channels, const AoConfig& config, double total_power,
             const Eigen::VectorXd& sigma2);

// equal_power freezes p at the even split; random_phase freezes f at the
// random initialization; miso regenerates the same drop with single-antenna
// receivers and runs the full loop on it.
enum class BaselineKind { equal_power, random_phase, miso };

AoResult run_baseline(BaselineKind kind, const ChannelSet& channels, const AoConfig& config,
                      double total_power, const Eigen::VectorXd& sigma2);

}  // namespace risopt
