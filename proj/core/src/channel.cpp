#include "risopt/channel.hpp"

#include "risopt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace risopt {

namespace {

// Salt for the per-user fading stream (see mix_seed).
constexpr std::uint64_t kFadingSalt = 0x4348414e4e454cULL;  // "CHANNEL"

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ArrayGeometry::validate() const {
  require(element_spacing > 0.0, "ArrayGeometry: element_spacing must be > 0");
  require(wavelength > 0.0, "ArrayGeometry: wavelength must be > 0");
  require(ris_elements >= 1, "ArrayGeometry: ris_elements must be >= 1");
  require(user_antennas >= 1, "ArrayGeometry: user_antennas must be >= 1");
}

void ChannelParams::validate() const {
  require(ref_gain > 0.0, "ChannelParams: ref_gain must be > 0");
  require(pathloss_exponent > 0.0, "ChannelParams: pathloss_exponent must be > 0");
  require(rician_kappa >= 0.0, "ChannelParams: rician_kappa must be >= 0");
  require(noise_power.size() > 0, "ChannelParams: noise_power must be non-empty");
  require((noise_power.array() > 0.0).all(), "ChannelParams: noise_power entries must be > 0");
}

void UserGeometry::validate() const {
  const auto k = distance.size();
  require(k > 0, "UserGeometry: no users");
  require(aoa_user.size() == k && aod_ris.size() == k,
          "UserGeometry: distance/aoa/aod lengths differ");
  require((distance.array() > 0.0).all(), "UserGeometry: distances must be > 0");
  const double half_pi = kPi / 2 + 1e-12;
  require((aoa_user.array().abs() <= half_pi).all() && (aod_ris.array().abs() <= half_pi).all(),
          "UserGeometry: angles must lie in [-pi/2, pi/2]");
}

void ChannelSet::validate() const {
  geometry.validate();
  params.validate();
  users.validate();
  require(static_cast<int>(H.size()) == users.users(), "ChannelSet: H count != user count");
  for (const auto& h : H) {
    require(h.rows() == geometry.user_antennas && h.cols() == geometry.ris_elements,
            "ChannelSet: H dimensions inconsistent with geometry");
    require(h.allFinite(), "ChannelSet: non-finite channel entry");
  }
}

Eigen::VectorXcd array_response(double angle, int count, const ArrayGeometry& geometry) {
  require(std::isfinite(angle), "array_response: non-finite angle");
  require(count >= 1, "array_response: count must be >= 1");
  const double step = 2.0 * kPi * geometry.spacing_ratio() * std::sin(angle);
  Eigen::VectorXcd a(count);
  for (int n = 0; n < count; ++n) {
    a(n) = std::polar(1.0, step * static_cast<double>(n));
  }
  return a;
}

ChannelSet synthesize_channels(const ArrayGeometry& geometry, const ChannelParams& params,
                               const UserGeometry& users, std::uint64_t seed) {
  geometry.validate();
  params.validate();
  users.validate();
  require(params.noise_power.size() == users.distance.size(),
          "synthesize_channels: noise_power length != user count");

  const int m = geometry.ris_elements;
  const int n = geometry.user_antennas;
  const int k_users = users.users();
  const double los_weight = std::sqrt(params.rician_kappa / (params.rician_kappa + 1.0));
  const double nlos_weight = std::sqrt(1.0 / (params.rician_kappa + 1.0));
  const double inv_sqrt2 = std::sqrt(0.5);

  ChannelSet out;
  out.geometry = geometry;
  out.params = params;
  out.users = users;
  out.seed = seed;
  out.H.reserve(k_users);

  for (int k = 0; k < k_users; ++k) {
    const double gain =
        std::sqrt(params.ref_gain / std::pow(users.distance(k), params.pathloss_exponent));
    const Eigen::VectorXcd a_rx = array_response(users.aoa_user(k), n, geometry);
    const Eigen::VectorXcd a_tx = array_response(users.aod_ris(k), m, geometry);

    // Keyed per user so that channels do not depend on evaluation order.
    SplitMix64 rng(mix_seed(seed, kFadingSalt + static_cast<std::uint64_t>(k)));
    Eigen::MatrixXcd nlos(n, m);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < m; ++c) {
        const double re = rng.next_gaussian();
        const double im = rng.next_gaussian();
        nlos(r, c) = std::complex<double>(re * inv_sqrt2, im * inv_sqrt2);
      }
    }

    out.H.push_back(gain * (los_weight * (a_rx * a_tx.adjoint()) + nlos_weight * nlos));
  }
  return out;
}

}  // namespace risopt
