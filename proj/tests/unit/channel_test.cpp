#include "risopt/channel.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

#include "test_util.hpp"

using namespace risopt;
using testutil::small_channels;
using testutil::small_scenario;

TEST_CASE("array response matches the elementwise definition") {
  ArrayGeometry g;
  g.element_spacing = 0.5;
  g.wavelength = 1.0;
  for (double angle : {0.0, 0.3, -0.7, 1.0, -1.5}) {
    const Eigen::VectorXcd a = array_response(angle, 8, g);
    REQUIRE(a.size() == 8);
    for (int n = 0; n < 8; ++n) {
      const std::complex<double> want =
          std::exp(std::complex<double>(0.0, 2.0 * kPi * 0.5 * std::sin(angle) * n));
      CHECK(std::abs(a(n) - want) <= 1e-14);
    }
    CHECK(std::abs(a(0) - 1.0) == 0.0);  // first element is the phase reference
  }
}

TEST_CASE("array response phase step scales with the spacing ratio") {
  ArrayGeometry g;
  g.element_spacing = 0.25;
  g.wavelength = 1.0;
  const double angle = 0.4;
  const Eigen::VectorXcd a = array_response(angle, 4, g);
  const double step = 2.0 * kPi * 0.25 * std::sin(angle);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(a(n) - std::polar(1.0, step * n)) <= 1e-14);
}

TEST_CASE("synthesis is deterministic in the seed and sensitive to it") {
  const ChannelSet c1 = small_channels(5, 3, 2, 42);
  const ChannelSet c2 = small_channels(5, 3, 2, 42);
  REQUIRE(c1.num_users() == 2);
  for (int k = 0; k < 2; ++k) {
    REQUIRE(c1.H[k].rows() == 3);
    REQUIRE(c1.H[k].cols() == 5);
    CHECK((c1.H[k] - c2.H[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  const ChannelSet c3 = small_channels(5, 3, 2, 43);
  CHECK((c1.H[0] - c3.H[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pure scattering reproduces the path-loss entry variance") {
  Scenario sc = small_scenario(40, 8, 1);
  sc.rician_kappa = 0.0;
  sc.distance_min = 30.0;
  sc.distance_max = 30.0;
  const double want = sc.ref_gain / std::pow(30.0, sc.pathloss_exponent);
  double sum2 = 0.0;
  long n = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const ChannelSet cs = sc.make_channels(seed);
    sum2 += cs.H[0].squaredNorm();
    n += cs.H[0].size();
  }
  CHECK(sum2 / static_cast<double>(n) == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("a dominant direct path gives a rank-one channel of the right strength") {
  Scenario sc = small_scenario(12, 4, 1);
  sc.rician_kappa = 1e12;
  sc.distance_min = 25.0;
  sc.distance_max = 25.0;
  const ChannelSet cs = sc.make_channels(7);
  const double gain = std::sqrt(sc.ref_gain / std::pow(25.0, sc.pathloss_exponent));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(cs.H[0]);
  CHECK(svd.singularValues()(1) <= 1e-5 * svd.singularValues()(0));
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 12; ++c)
      CHECK(std::abs(cs.H[0](r, c)) == doctest::Approx(gain).epsilon(1e-5));
}

TEST_CASE("same fading draws scale exactly with the distance power law") {
  Scenario near = small_scenario(6, 3, 2);
  Scenario far = near;
  near.distance_min = near.distance_max = 20.0;
  far.distance_min = far.distance_max = 40.0;
  const ChannelSet cn = near.make_channels(11);
  const ChannelSet cf = far.make_channels(11);
  const double ratio = std::pow(2.0, -near.pathloss_exponent / 2.0);
  for (int k = 0; k < 2; ++k) {
    const double err = (cf.H[k] - ratio * cn.H[k]).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-12 * cn.H[k].cwiseAbs().maxCoeff());
  }
}

TEST_CASE("direct and scattered parts mix by the power-ratio weights") {
  Scenario base = small_scenario(6, 3, 1);
  base.distance_min = base.distance_max = 30.0;
  Scenario los = base, nlos = base, mixed = base;
  los.rician_kappa = 1e12;
  nlos.rician_kappa = 0.0;
  mixed.rician_kappa = 3.0;
  const Eigen::MatrixXcd hl = los.make_channels(5).H[0];
  const Eigen::MatrixXcd hn = nlos.make_channels(5).H[0];
  const Eigen::MatrixXcd hm = mixed.make_channels(5).H[0];
  const Eigen::MatrixXcd want = std::sqrt(3.0 / 4.0) * hl + std::sqrt(1.0 / 4.0) * hn;
  CHECK((hm - want).cwiseAbs().maxCoeff() <= 1e-5 * hm.cwiseAbs().maxCoeff());
}

TEST_CASE("invalid channel inputs are rejected") {
  ArrayGeometry g;
  UserGeometry u;
  u.distance = Eigen::VectorXd::Constant(1, 10.0);
  u.aoa_user = Eigen::VectorXd::Zero(1);
  u.aod_ris = Eigen::VectorXd::Zero(1);
  ChannelParams p;
  p.noise_power = Eigen::VectorXd::Constant(1, 1e-8);

  SUBCASE("zero-element geometry") {
    g.ris_elements = 0;
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
  SUBCASE("nonpositive distance") {
    u.distance(0) = 0.0;
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
  SUBCASE("angle outside the array's field") {
    u.aoa_user(0) = 2.0;
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
  SUBCASE("nonpositive noise power") {
    p.noise_power(0) = 0.0;
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
  SUBCASE("mismatched user vector lengths") {
    u.aoa_user = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
  SUBCASE("nonpositive path-loss exponent") {
    p.pathloss_exponent = 0.0;
    CHECK_THROWS_AS(synthesize_channels(g, p, u, 1), std::invalid_argument);
  }
}
