#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hypoflow/classical.hpp"
#include "hypoflow/error.hpp"
#include "hypoflow/lifting.hpp"
#include "hypoflow/quantum.hpp"

using namespace hypoflow;

namespace {

GeneratorDecomposition two_qubit() {
  const LindbladModel model{pauli_string("XX"), {pauli_string("XI"), pauli_string("ZI")}, 1.0};
  return build_lindblad_heisenberg(model, stationary_state(model).sigma);
}

GeneratorDecomposition thermal_qubit() {
  const LindbladModel model{0.5 * pauli('Z'), {std::sqrt(2.0 / 3.0) * pauli('-'), std::sqrt(1.0 / 3.0) * pauli('+')}, 1.0};
  return build_lindblad_heisenberg(model, stationary_state(model).sigma);
}

}  // namespace

TEST_CASE("quadratic overdamped limit has gap m") {
  for (double m : {0.04, 1.0, 3.0}) {
    const OverdampedLimit lim = overdamped_limit(build_langevin(PotentialSpec::quadratic(m), 10, 10));
    REQUIRE(lim.gap.has_value());
    CHECK(*lim.gap == doctest::Approx(m).epsilon(1e-8));
    CHECK(lim.range_residual < 1e-10);
    CHECK(lim.basis.cols() == 10);
  }
}

TEST_CASE("overdamped limit agrees with the direct overdamped discretization") {
  // Both are Galerkin approximations of the same operator; the low spectrum agrees
  // once the x-basis resolves it, the top of the spectrum does not.
  const PotentialSpec u = PotentialSpec::periodic_cosine(1.0);
  const OverdampedLimit lim = overdamped_limit(build_langevin(u, 16, 4));
  const Eigen::VectorXd direct = Eigen::SelfAdjointEigenSolver<Matrix>(-build_overdamped(u, 16).matrix).eigenvalues();
  const Eigen::VectorXd lifted = Eigen::SelfAdjointEigenSolver<Matrix>(-lim.generator.matrix).eigenvalues();
  for (Index i = 0; i < 4; ++i) CHECK(std::abs(direct(i) - lifted(i)) < 1e-6 * std::max(1.0, direct(i)));
}

TEST_CASE("lift report on the quadratic model") {
  const LiftReport r = check_lift_conditions(build_langevin(PotentialSpec::quadratic(1.0), 8, 8));
  CHECK(r.php_residual < 1e-12);
  CHECK(r.kernel_equal);
  CHECK(r.strict_subspace);
  CHECK_FALSE(r.coercive());
  CHECK(r.second_order_residual < 1e-10);
  CHECK(r.coercivity_lambda_s == doctest::Approx(1.0));
  CHECK(r.s_tilde_m == doctest::Approx(1.0));
  CHECK(r.collapsed_dim == 8);
  CHECK(r.kernel_dim == 1);
}

TEST_CASE("thermal qubit is coercive and two-qubit is hypocoercive") {
  CHECK(check_lift_conditions(thermal_qubit()).coercive());
  const LiftReport r = check_lift_conditions(two_qubit());
  CHECK_FALSE(r.coercive());
  CHECK(r.collapsed_dim == 4);
  CHECK(r.kernel_dim == 2);
  CHECK(r.php_residual < 1e-10);
}

TEST_CASE("a non-positive S is rejected") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(1.0), 4, 4);
  CHECK_THROWS_AS(check_lift_conditions(d, default_s_operator(d).scaled(-1.0)), Error);
}

TEST_CASE("rate scan locates critical damping on the quadratic model") {
  const double m = 0.25;
  RateScanOptions opt;
  opt.prefactors = false;
  const RateReport r = rate_scan(build_langevin(PotentialSpec::quadratic(m), 8, 8), opt);
  CHECK(r.refined_gamma == doctest::Approx(2.0 * std::sqrt(m)).epsilon(1e-3));
  CHECK(r.refined_gap == doctest::Approx(std::sqrt(m)).epsilon(1e-6));
  CHECK(r.gamma_grid.size() == 48);
}

TEST_CASE("prefactors, Lemma bound and ceiling on the two-qubit model") {
  RateScanOptions opt;
  opt.gamma_grid = log_grid(0.1, 10.0, 9);
  const GeneratorDecomposition d = two_qubit();
  const RateReport r = rate_scan(d, opt);
  for (double c : r.prefactors) CHECK(c >= 1.0);
  const RateBoundCheck check = check_rate_bounds(r, check_lift_conditions(d));
  CHECK(check.lemma_holds);
  REQUIRE(check.theorem_holds.has_value());
  CHECK(*check.theorem_holds);
}

TEST_CASE("closed-form rates") {
  CHECK(langevin_rate(4.0, 2.0) == doctest::Approx(0.5));
  CHECK(langevin_rate(1.0, 1.0, 2.0) == doctest::Approx(0.125));
  // optimum of gamma / (c1^2 + gamma^2 lambda c2^2) at gamma = c1 / (c2 sqrt(lambda))
  const double best = 2.0 / (3.0 * std::sqrt(0.5));
  CHECK(quantum_rate(0.5, 2.0, 3.0, best) > quantum_rate(0.5, 2.0, 3.0, 1.01 * best));
  CHECK(quantum_rate(0.5, 2.0, 3.0, best) > quantum_rate(0.5, 2.0, 3.0, 0.99 * best));
  CHECK_THROWS_AS(langevin_rate(-1.0, 1.0), Error);
}

TEST_CASE("log grid endpoints") {
  const std::vector<double> g = log_grid(0.1, 10.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(g[2] == doctest::Approx(10.0));
}
