#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "hypoflow/classical.hpp"
#include "hypoflow/error.hpp"

using namespace hypoflow;

namespace {

// Kinetic OU (U = m x^2/2): eigenvalues -(j mu_+ + k mu_-), mu_pm = (g +- sqrt(g^2 - 4m)) / 2.
double ou_gap(double m, double gamma) {
  const std::complex<double> root = std::sqrt(std::complex<double>(gamma * gamma - 4.0 * m));
  return (0.5 * (gamma - root)).real();
}

}  // namespace

TEST_CASE("quadratic Langevin spectral gap matches the OU oracle") {
  for (double m : {0.25, 1.0, 4.0})
    for (double gamma : {0.3, 1.0, 2.0 * std::sqrt(m), 5.0}) {
      const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(m), 16, 16, gamma);
      CAPTURE(m);
      CAPTURE(gamma);
      CHECK(spectral_gap(d.generator()).gap == doctest::Approx(ou_gap(m, gamma)).epsilon(1e-6));
    }
}

TEST_CASE("decomposition structure") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::periodic_cosine(1.5), 9, 7, 0.8);
  CHECK(d.dim() == 63);
  CHECK(symmetry_check(d.l_a, 1e-10).antisymmetric_residual < 1e-10);
  CHECK(symmetry_check(d.l_s, 1e-10).symmetric_residual < 1e-10);
  CHECK(kernel_basis(d.l_s).cols() == 9);
  CHECK((d.l_s * d.pi_s).matrix.norm() < 1e-12);
  CHECK(d.basis_meta.size() == 63);
}

TEST_CASE("L_s acts on Hermite degree k as multiplication by -k") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(1.0), 3, 5);
  for (Index idx = 0; idx < d.dim(); ++idx) {
    const int k = d.basis_meta[static_cast<std::size_t>(idx)].v_degree;
    CHECK(std::abs(d.l_s.matrix(idx, idx) + static_cast<double>(k)) < 1e-14);
  }
}

TEST_CASE("Gaussian Poincare inequality on random coefficient vectors") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::periodic_cosine(1.0), 8, 8);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const LinOp complement = identity(d.space()) - d.pi_s;
  for (int trial = 0; trial < 100; ++trial) {
    Vector f(d.dim());
    for (Index i = 0; i < f.size(); ++i) f(i) = Scalar(normal(rng), normal(rng));
    const double lhs = std::pow(d.space().norm(complement.apply(f)), 2);
    const double rhs = d.space().inner(f, -(d.l_s.matrix * f)).real();
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("overdamped generator gaps") {
  for (double m : {0.01, 0.5, 2.0})
    CHECK(spectral_gap(build_overdamped(PotentialSpec::quadratic(m), 12)).gap == doctest::Approx(m).epsilon(1e-10));
  // free torus: first Fourier mode, eigenvalue -1
  CHECK(spectral_gap(build_overdamped(PotentialSpec::periodic_free(), 9)).gap == doctest::Approx(1.0).epsilon(1e-10));
  // U = a cos x: the ground-state transform gives -f'' + (a^2 sin^2 x / 4 + a cos x / 2) f,
  // whose second eigenvalue (periodic finite differences) is the Poincare constant.
  const double a = 1.0;
  const int n = 600;
  const double h = 2.0 * M_PI / n;
  Eigen::MatrixXd schr = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double x = i * h;
    schr(i, i) = 2.0 / (h * h) + a * a * std::sin(x) * std::sin(x) / 4.0 + a * std::cos(x) / 2.0;
    schr(i, (i + 1) % n) = schr(i, (i + n - 1) % n) = -1.0 / (h * h);
  }
  const double oracle = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(schr, Eigen::EigenvaluesOnly).eigenvalues()(1);
  const PoincareEstimate est = poincare_constant(PotentialSpec::periodic_cosine(a), 16);
  CHECK(est.converged);
  CHECK(est.value == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("periodic potential evaluation") {
  const PotentialSpec u = PotentialSpec::periodic_cosine(2.0);
  CHECK(u.value(0.3) == doctest::Approx(2.0 * std::cos(0.3)));
  CHECK(u.derivative(0.3) == doctest::Approx(-2.0 * std::sin(0.3)));
  CHECK(u.second_derivative(0.3) == doctest::Approx(-2.0 * std::cos(0.3)));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(PotentialSpec::quadratic(-1.0), Error);
  CHECK_THROWS_AS(build_langevin(PotentialSpec::quadratic(1.0), 1, 4), Error);
  std::vector<std::complex<double>> asym = {{1.0, 0.0}, {0.0, 0.0}, {2.0, 0.0}};
  CHECK_THROWS_AS(PotentialSpec::periodic(asym), Error);
}
