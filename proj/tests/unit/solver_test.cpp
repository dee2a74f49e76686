#include "risopt/solver.hpp"

#include <doctest.h>

#include <cmath>

#include "risopt/rng.hpp"

using namespace risopt;

namespace {

double geomean_of(const Eigen::VectorXd& x, const std::vector<int>& vars) {
  double acc = 0.0;
  for (int v : vars) acc += std::log(x(v));
  return std::exp(acc / static_cast<double>(vars.size()));
}

}  // namespace

TEST_CASE("one-variable geometric mean saturates its cap") {
  ConeProgram prog(1);
  prog.add_inequality(Eigen::VectorXd::Ones(1), 5.0);
  prog.set_maximize_geometric_mean({0});
  const SolveReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::optimal);
  CHECK(rep.x(0) == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(rep.objective_value == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("geometric mean under a sum budget lands at the even split") {
  ConeProgram prog(2);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  prog.add_inequality(ones, 4.0);
  prog.set_maximize_geometric_mean({0, 1});
  const SolveReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::optimal);
  CHECK(rep.x(0) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(rep.x(1) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(rep.objective_value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("linear objective over a quadratic ball") {
  ConeProgram prog(2);
  prog.add_quadratic(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), -2.0);
  prog.set_maximize_linear(Eigen::VectorXd::Ones(2));
  const SolveReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::optimal);
  CHECK(rep.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.objective_value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("linear objective under a second-order cone") {
  ConeProgram prog(2);
  // ||x|| <= 1
  prog.add_soc(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
               Eigen::VectorXd::Zero(2), 1.0);
  Eigen::VectorXd c(2);
  c << 1.0, 0.0;
  prog.set_maximize_linear(c);
  const SolveReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::optimal);
  CHECK(rep.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(rep.x(1)) <= 1e-5);
}

TEST_CASE("contradictory constraints are reported infeasible") {
  ConeProgram prog(1);
  prog.set_lower_bound(0, 2.0);
  prog.add_inequality(Eigen::VectorXd::Ones(1), 1.0);
  prog.set_maximize_linear(Eigen::VectorXd::Ones(1));
  CHECK(solve(prog).status == SolveStatus::infeasible);
}

TEST_CASE("an unbounded ray is detected") {
  ConeProgram prog(1);
  prog.set_lower_bound(0, 0.0);
  prog.set_maximize_linear(Eigen::VectorXd::Ones(1));
  CHECK(solve(prog).status == SolveStatus::unbounded);
}

TEST_CASE("equality constraints are eliminated exactly") {
  ConeProgram prog(2);
  Eigen::VectorXd diff(2);
  diff << 1.0, -1.0;
  prog.add_equality(diff, 0.0);  // x0 == x1
  prog.add_inequality(Eigen::VectorXd::Ones(2), 2.0);
  Eigen::VectorXd c(2);
  c << 1.0, 0.0;
  prog.set_maximize_linear(c);
  const SolveReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::optimal);
  CHECK(rep.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(rep.x(0) - rep.x(1)) <= 1e-10);
}

TEST_CASE("a fully determined system short-circuits") {
  SUBCASE("consistent") {
    ConeProgram prog(1);
    prog.add_equality(Eigen::VectorXd::Ones(1), 1.5);
    prog.set_maximize_linear(Eigen::VectorXd::Ones(1));
    const SolveReport rep = solve(prog);
    REQUIRE(rep.status == SolveStatus::optimal);
    CHECK(rep.x(0) == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("inconsistent") {
    ConeProgram prog(1);
    prog.add_equality(Eigen::VectorXd::Ones(1), 1.0);
    prog.add_equality(Eigen::VectorXd::Ones(1), 2.0);
    prog.set_maximize_linear(Eigen::VectorXd::Ones(1));
    CHECK(solve(prog).status == SolveStatus::infeasible);
  }
}

TEST_CASE("both geometric-mean encodings agree on the argmax") {
  SplitMix64 rng(41);
  for (int k : {1, 2, 3, 5}) {
    for (int inst = 0; inst < 3; ++inst) {
      ConeProgram prog(k);
      for (int i = 0; i < k; ++i) prog.set_lower_bound(i, 0.01);
      // a few random nonnegative-coefficient caps keep the feasible set bounded
      for (int row = 0; row < k + 1; ++row) {
        Eigen::VectorXd a(k);
        for (int i = 0; i < k; ++i) a(i) = 0.1 + rng.next_double();
        prog.add_inequality(a, 1.2 * a.sum());
      }
      std::vector<int> vars(k);
      for (int i = 0; i < k; ++i) vars[i] = i;
      prog.set_maximize_geometric_mean(vars);

      // The argmax comparison needs the iterates closer to the boundary than
      // the default path target leaves them, so ask for a tighter gap.
      SolveOptions opts;
      opts.tol = 1e-7;
      const SolveReport smooth = solve(prog, opts);
      const ConeProgram coned = encode_geometric_mean(prog, vars, GeomeanEncoding::soc_cascade);
      const SolveReport cones = solve(coned, opts);
      REQUIRE(smooth.status == SolveStatus::optimal);
      REQUIRE(cones.status == SolveStatus::optimal);
      CHECK((smooth.x.head(k) - cones.x.head(k)).cwiseAbs().maxCoeff() <= 1e-5);
      CHECK(geomean_of(smooth.x, vars) ==
            doctest::Approx(geomean_of(cones.x, vars)).epsilon(1e-5));
    }
  }
}

TEST_CASE("solves are bitwise deterministic") {
  ConeProgram prog(3);
  for (int i = 0; i < 3; ++i) prog.set_lower_bound(i, 0.1);
  Eigen::VectorXd a(3);
  a << 1.0, 2.0, 0.5;
  prog.add_inequality(a, 3.0);
  prog.add_quadratic(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), -4.0);
  prog.set_maximize_geometric_mean({0, 1, 2});
  const SolveReport r1 = solve(prog);
  const SolveReport r2 = solve(prog);
  REQUIRE(r1.status == SolveStatus::optimal);
  REQUIRE(r1.x.size() == r2.x.size());
  for (Eigen::Index i = 0; i < r1.x.size(); ++i) CHECK(r1.x(i) == r2.x(i));
  CHECK(r1.objective_value == r2.objective_value);
  CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("warm starts do not change the answer") {
  ConeProgram prog(2);
  prog.add_inequality(Eigen::VectorXd::Ones(2), 4.0);
  prog.set_maximize_geometric_mean({0, 1});

  SolveOptions interior;
  interior.warm_start = (Eigen::VectorXd(2) << 1.5, 1.4).finished();
  const SolveReport warm = solve(prog, interior);
  REQUIRE(warm.status == SolveStatus::optimal);
  CHECK(warm.x(0) == doctest::Approx(2.0).epsilon(1e-5));

  SolveOptions outside;  // infeasible hint must fall back to the feasibility phase
  outside.warm_start = (Eigen::VectorXd(2) << 5.0, 5.0).finished();
  const SolveReport cold = solve(prog, outside);
  REQUIRE(cold.status == SolveStatus::optimal);
  CHECK(cold.x(0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("optimal reports are certified") {
  SplitMix64 rng(43);
  for (int inst = 0; inst < 10; ++inst) {
    const int k = 2 + static_cast<int>(rng.next_u64() % 3);
    ConeProgram prog(k);
    for (int i = 0; i < k; ++i) prog.set_lower_bound(i, 0.05);
    Eigen::VectorXd a(k);
    for (int i = 0; i < k; ++i) a(i) = 0.5 + rng.next_double();
    prog.add_inequality(a, 2.0 * a.sum());
    prog.add_quadratic(Eigen::MatrixXd::Identity(k, k), Eigen::VectorXd::Zero(k),
                       -4.0 * k);
    std::vector<int> vars(k);
    for (int i = 0; i < k; ++i) vars[i] = i;
    prog.set_maximize_geometric_mean(vars);
    const SolveReport rep = solve(prog);
    REQUIRE(rep.status == SolveStatus::optimal);
    CHECK(rep.kkt_residual <= 1e-6);
    CHECK(prog.max_violation(rep.x) <= 1e-7);
  }
}

TEST_CASE("an exhausted iteration budget is reported as such") {
  ConeProgram prog(2);
  prog.add_inequality(Eigen::VectorXd::Ones(2), 4.0);
  prog.set_maximize_geometric_mean({0, 1});
  SolveOptions opts;
  opts.max_iter = 1;
  const SolveReport rep = solve(prog, opts);
  CHECK(rep.status == SolveStatus::max_iterations);
  CHECK(rep.iterations <= 1);
}
