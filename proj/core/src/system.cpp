#include "risopt/system.hpp"

#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_shapes(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                  const PowerAllocation& p, const Eigen::VectorXd& sigma2) {
  const int k_users = channels.num_users();
  require(k_users > 0, "system: empty channel set");
  require(W.users() == k_users && p.users() == k_users && sigma2.size() == k_users,
          "system: W/p/sigma2 user counts differ from channels");
  for (int k = 0; k < k_users; ++k) {
    require(channels.H[k].cols() == f.f.size(), "system: f length != channel columns");
    require(channels.H[k].rows() == W.w[k].size(), "system: w_k length != channel rows");
  }
  require((sigma2.array() > 0.0).all(), "system: sigma2 entries must be > 0");
}

}  // namespace

void RisVector::validate() const {
  require(f.size() > 0, "RisVector: empty");
  require((f.array().abs() <= 1.0 + 1e-9).all(), "RisVector: |f_m| exceeds 1");
}

void BeamformerSet::validate() const {
  require(!w.empty(), "BeamformerSet: empty");
  for (const auto& wk : w) {
    require(std::abs(wk.norm() - 1.0) <= 1e-9, "BeamformerSet: ||w_k|| != 1");
  }
}

void PowerAllocation::validate() const {
  require(p.size() > 0, "PowerAllocation: empty");
  require((p.array() >= -1e-12).all(), "PowerAllocation: negative power");
  require(p.sum() <= budget * (1.0 + 1e-9), "PowerAllocation: budget exceeded");
}

double sinr(int k, const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
            const PowerAllocation& p, const Eigen::VectorXd& sigma2) {
  check_shapes(channels, f, W, p, sigma2);
  require(k >= 0 && k < channels.num_users(), "sinr: user index out of range");
  const std::complex<double> gain = W.w[k].dot(channels.H[k] * f.f);  // w_k^H H_k f
  const double g = std::norm(gain);
  const double interference = (p.p.sum() - p.p(k)) * g;
  return p.p(k) * g / (interference + sigma2(k) * W.w[k].squaredNorm());
}

RateReport rate_report(const ChannelSet& channels, const RisVector& f, const BeamformerSet& W,
                       const PowerAllocation& p, const Eigen::VectorXd& sigma2) {
  const int k_users = channels.num_users();
  RateReport report;
  report.sinr.resize(k_users);
  report.rate.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    report.sinr(k) = sinr(k, channels, f, W, p, sigma2);
    report.rate(k) = std::log2(1.0 + report.sinr(k));
  }
  report.sum_rate = report.rate.sum();
  return report;
}

ConstraintReport check_feasibility(const ChannelSet& channels, const RisVector& f,
                                   const BeamformerSet& W, const PowerAllocation& p,
                                   const Eigen::VectorXd& sigma2, double gamma_th, double tol) {
  const int k_users = channels.num_users();
  ConstraintReport report;
  report.qos_slack.resize(k_users);
  report.norm_slack.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    report.qos_slack(k) = sinr(k, channels, f, W, p, sigma2) - gamma_th;
    report.norm_slack(k) = -std::abs(W.w[k].norm() - 1.0);
  }
  report.modulus_slack = 1.0 - f.f.array().abs();
  report.power_slack = p.p;
  report.budget_slack = p.budget - p.p.sum();

  const auto ok = [tol](double slack) { return slack >= -tol; };
  report.feasible = ok(report.budget_slack) && (report.qos_slack.array() >= -tol).all() &&
                    (report.modulus_slack.array() >= -tol).all() &&
                    (report.power_slack.array() >= -tol).all() &&
                    (report.norm_slack.array() >= -tol).all();
  return report;
}

}  // namespace risopt
