#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace risopt {

// Uniform linear arrays on both ends of the link: the transmissive surface
// has `ris_elements` (M) elements, each receiver has `user_antennas` (N).
struct ArrayGeometry {
  double element_spacing = 0.5;  // meters
  double wavelength = 1.0;       // meters
  int ris_elements = 1;          // M
  int user_antennas = 1;         // N

  double spacing_ratio() const { return element_spacing / wavelength; }
  void validate() const;
};

// Large-scale and small-scale fading parameters.  `ref_gain` is the linear
// power gain at the 1 m reference distance; `noise_power` holds one receiver
// noise variance (watts) per user.
struct ChannelParams {
  double ref_gain = 1e-3;
  double pathloss_exponent = 2.2;
  double rician_kappa = 3.0;
  Eigen::VectorXd noise_power;

  void validate() const;
};

// Placement of the K users relative to the surface: link distance, angle of
// arrival at the user array, and angle of departure from the surface.
struct UserGeometry {
  Eigen::VectorXd distance;
  Eigen::VectorXd aoa_user;
  Eigen::VectorXd aod_ris;

  int users() const { return static_cast<int>(distance.size()); }
  void validate() const;
};

// One synthesized drop: K channel matrices H[k] of shape N x M, together
// with everything needed to regenerate a variant of the same drop (for
// example the same user placement with single-antenna receivers) under the
// identical seed.
struct ChannelSet {
  std::vector<Eigen::MatrixXcd> H;
  ArrayGeometry geometry;
  ChannelParams params;
  UserGeometry users;
  std::uint64_t seed = 0;

  int num_users() const { return static_cast<int>(H.size()); }
  void validate() const;
};

// Array response of a `count`-element ULA at angle `angle` (radians):
//   a_n = exp(j 2*pi * (spacing/wavelength) * n * sin(angle)),  n = 0..count-1.
Eigen::VectorXcd array_response(double angle, int count, const ArrayGeometry& geometry);

// Rician-faded channels
//   H_k = sqrt(c0 / d_k^alpha) * ( sqrt(kappa/(kappa+1)) * a_N(phi_k) a_M(varphi_k)^H
//                                 + sqrt(1/(kappa+1)) * G_k ),
// with G_k i.i.d. CN(0,1).  Deterministic in (inputs, seed); per-user draws
// are keyed by user index so permuting users permutes channels.
ChannelSet synthesize_channels(const ArrayGeometry& geometry, const ChannelParams& params,
                               const UserGeometry& users, std::uint64_t seed);

}  // namespace risopt
