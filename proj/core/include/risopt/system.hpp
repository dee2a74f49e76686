#pragma once

#include "risopt/channel.hpp"

namespace risopt {

// Transmissive surface coefficients, one complex entry per element with
// |f_m| <= 1 (passive surface: each element can only attenuate).
struct RisVector {
  Eigen::VectorXcd f;

  int size() const { return static_cast<int>(f.size()); }
  void validate() const;
};

// One unit-norm receive combiner per user, each of length N.
struct BeamformerSet {
  std::vector<Eigen::VectorXcd> w;

  int users() const { return static_cast<int>(w.size()); }
  void validate() const;
};

// Per-user transmit powers with a shared budget sum(p) <= budget.
struct PowerAllocation {
  Eigen::VectorXd p;
  double budget = 0.0;

  int users() const { return static_cast<int>(p.size()); }
  void validate() const;
};

struct RateReport {
  Eigen::VectorXd sinr;
  Eigen::VectorXd rate;      // log2(1 + sinr_k)
  double sum_rate = 0.0;
};

// Post-combining SINR of user k.  All users share the one transmitted
// superposition through the same surface, so user k's own effective gain
// |w_k^H H_k f|^2 multiplies both its signal and the other users' powers:
//   sinr_k = p_k g_k / ( sum_{i != k} p_i g_k + sigma2_k ||w_k||^2 ),
//   g_k = |w_k^H H_k f|^2.
// `sigma2` is the per-user noise power (watts); it is passed explicitly so
// callers can evaluate a ChannelSet under a different noise floor.
double sinr(int k, const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
            const PowerAllocation& p, const Eigen::VectorXd& sigma2);

RateReport rate_report(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                       const PowerAllocation& p, const Eigen::VectorXd& sigma2);

// Signed slacks for every design constraint; nonnegative means satisfied.
// `feasible` allows violations up to `tol` so that iterates sitting exactly
// on a boundary (unit-modulus surface entries, tight power budget) pass.
struct ConstraintReport {
  Eigen::VectorXd qos_slack;      // sinr_k - gamma_th
  Eigen::VectorXd modulus_slack;  // 1 - |f_m|
  Eigen::VectorXd power_slack;    // p_k
  double budget_slack = 0.0;      // budget - sum(p)
  Eigen::VectorXd norm_slack;     // -abs(||w_k|| - 1)
  bool feasible = false;
};

ConstraintReport check_feasibility(const ChannelSet& channels, const RisVector& f,
                                   const BeamformerSet& W, const PowerAllocation& p,
                                   const Eigen::VectorXd& sigma2, double gamma_th,
                                   double tol = 1e-7);

}  // namespace risopt
