#pragma once

// Spectral Galerkin discretization of the Langevin and overdamped generators
// in L^2(mu). Basis functions are phi_i(x) He_k(v) / sqrt(k!), orthonormal in
// L^2(mu), so every space built here has identity gram.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypoflow/decomposition.hpp"
#include "hypoflow/hilbert.hpp"

namespace hypoflow {

class PotentialSpec {
 public:
  enum class Kind { quadratic, periodic };

  /// U(x) = m x^2 / 2 on the real line.
  static PotentialSpec quadratic(double m);
  /// U(x) = sum_{k=-K}^{K} c_k e^{ikx} on the torus [0, 2pi); `coefficients`
  /// holds c_{-K}, ..., c_K and must be conjugate symmetric.
  static PotentialSpec periodic(std::vector<std::complex<double>> coefficients);
  /// U = 0 on the torus.
  static PotentialSpec periodic_free();
  /// U(x) = a cos(x) on the torus.
  static PotentialSpec periodic_cosine(double amplitude);

  Kind kind() const { return kind_; }
  double curvature() const { return m_; }
  const std::vector<std::complex<double>>& coefficients() const { return coefficients_; }
  int max_mode() const { return static_cast<int>(coefficients_.size() / 2); }

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  /// Upper bound on |U''|, used for step-size guards.
  double curvature_bound() const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::quadratic;
  double m_ = 1.0;
  std::vector<std::complex<double>> coefficients_;
};

/// Matrices of the orthonormal x-basis {phi_i} of L^2(mu_x), mu_x ~ e^{-U}:
///   derivative(j, i) = <phi_j, phi_i'>
///   force(j, i)      = <phi_j, U' phi_i>
///   stiffness(j, i)  = <phi_j', phi_i'>
/// phi_0 is the constant function.
struct XBasis {
  Eigen::MatrixXd derivative;
  Eigen::MatrixXd force;
  Eigen::MatrixXd stiffness;
  int quadrature_points = 0;  // 0 for the closed-form Hermite basis
};

/// Number of x-basis functions actually used: n_x for the Hermite basis, n_x
/// rounded up to odd on the torus so every cos(kx) comes with its sin(kx)
/// (an unpaired top mode has a projected derivative of zero and would add a
/// spurious stationary state).
int effective_n_x(const PotentialSpec& potential, int n_x);

XBasis build_x_basis(const PotentialSpec& potential, int n_x);

/// L_a = v d_x - U' d_v and L_s = -v d_v + d_v^2 on span{phi_i He_k}, i < n_x, k < n_v.
/// Basis index of (i, k) is i * n_v + k.
GeneratorDecomposition build_langevin(const PotentialSpec& potential, int n_x, int n_v, double gamma = 1.0);

/// L_O = -U' d_x + d_x^2 on span{phi_i}, i < n_x.
LinOp build_overdamped(const PotentialSpec& potential, int n_x);

struct PoincareEstimate {
  double value = 0.0;          // gap at n_x
  double refined_value = 0.0;  // gap at 2 n_x
  double relative_change = 0.0;
  bool converged = true;       // relative_change <= 1e-4
  int n_x = 0;
};

PoincareEstimate poincare_constant(const PotentialSpec& potential, int n_x);

}  // namespace hypoflow
