#pragma once

// Finite-dimensional weighted Hilbert spaces and the operator algebra used by
// every other module: adjoints, kernels, projectors, gaps, semigroups.

#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace hypoflow {

using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

enum class Field { real, complex };

/// Default relative tolerance for kernels and spectral classification.
inline constexpr double kKernelTol = 1e-9;

/// Inner-product space C^dim with <x, y> = x^H * gram * y.
///
/// The Cholesky factor gram = R^H R is computed once at construction and
/// shared by all copies, so all weighted computations reduce to Euclidean
/// ones through the similarity A -> R A R^{-1}.
class WeightedSpace {
 public:
  explicit WeightedSpace(Matrix gram, Field field = Field::complex);

  static WeightedSpace euclidean(Index dim, Field field = Field::real);

  Index dim() const;
  Field field() const;
  const Matrix& gram() const;
  /// Upper-triangular R with gram = R^H R.
  const Matrix& factor() const;

  Scalar inner(const Vector& x, const Vector& y) const;
  double norm(const Vector& x) const;

  /// R A R^{-1}: the matrix of A in a gram-orthonormal frame.
  Matrix to_euclidean(const Matrix& a) const;
  /// Inverse of to_euclidean.
  Matrix from_euclidean(const Matrix& m) const;
  /// R x and R^{-1} y, i.e. coordinates in / out of the orthonormal frame.
  Matrix whiten(const Matrix& x) const;
  Matrix unwhiten(const Matrix& y) const;

  bool same_as(const WeightedSpace& other) const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

/// A matrix together with the space it acts on.
struct LinOp {
  WeightedSpace space;
  Matrix matrix;

  LinOp(WeightedSpace s, Matrix m);

  Index dim() const { return matrix.rows(); }
  LinOp operator+(const LinOp& rhs) const;
  LinOp operator-(const LinOp& rhs) const;
  LinOp operator*(const LinOp& rhs) const;
  LinOp scaled(Scalar s) const;
  Vector apply(const Vector& v) const { return matrix * v; }
};

LinOp identity(const WeightedSpace& space);
LinOp zero(const WeightedSpace& space);

/// Operator norm induced by the weighted vector norm.
double weighted_norm(const LinOp& op);

enum class Symmetry { symmetric, antisymmetric, neither };

struct SymmetryReport {
  Symmetry kind = Symmetry::neither;
  double symmetric_residual = 0.0;      // ||A* - A|| / ||A||
  double antisymmetric_residual = 0.0;  // ||A* + A|| / ||A||
};

struct SpectralReport {
  std::vector<Scalar> eigenvalues;  // sorted by (Re, Im, index)
  double gap = 0.0;
  Index kernel_dim = 0;
  double tolerance_used = 0.0;
};

struct RelaxationReport {
  double t_rel = 0.0;
  double lower_bound = 0.0;  // 1 / (2 s(L))
  double singular_gap = 0.0;
};

/// A* = gram^{-1} A^H gram.
LinOp adjoint(const LinOp& op);

SymmetryReport symmetry_check(const LinOp& op, double tol);

/// Gram-orthonormal basis (as columns) of {x : ||Ax|| <= tol ||A|| ||x||}.
Matrix kernel_basis(const LinOp& op, double tol = kKernelTol);

/// Orthogonal projector onto span(basis); basis must be gram-orthonormal.
LinOp projector(const WeightedSpace& space, const Matrix& basis);

/// Projector onto ker(op), i.e. P_infinity for a generator.
LinOp kernel_projector(const LinOp& op, double tol = kKernelTol);

/// Gram-orthonormalize the columns of `vectors`, dropping numerically
/// dependent directions (relative tolerance `tol`).
Matrix orthonormalize(const WeightedSpace& space, const Matrix& vectors, double tol = kKernelTol);

/// Gram-orthonormal basis of the orthogonal complement of span(basis).
Matrix complement_basis(const WeightedSpace& space, const Matrix& basis);

/// Spectral gap of a dissipative generator: min Re(-lambda) over |lambda| > tol * ||A||.
SpectralReport spectral_gap(const LinOp& op, double tol = kKernelTol);

/// Eigenvalues sorted by (Re, Im, index).
std::vector<Scalar> sorted_eigenvalues(const LinOp& op);

/// Smallest singular value of op restricted to ker(op)^perp, weighted geometry.
double singular_value_gap(const LinOp& op, double tol = kKernelTol);

/// Moore-Penrose inverse of a symmetric operator (weighted sense).
LinOp pseudo_inverse(const LinOp& op, double tol = kKernelTol);

/// f(A) for a symmetric operator through its Hermitian eigendecomposition.
template <typename F>
LinOp symmetric_function(const LinOp& op, F&& f);

/// exp(tA) v.
Vector semigroup_apply(const LinOp& op, double t, const Vector& v);

/// Options for relaxation_time.
struct RelaxationOptions {
  double tol = kKernelTol;
  double rel_precision = 1e-3;
  double t_max = 1e6;
};

RelaxationReport relaxation_time(const LinOp& op, const RelaxationOptions& options = {});

/// Cached propagator t -> exp(tA). Uses the eigendecomposition when the
/// eigenvector matrix is well conditioned (cond < 1e6) and scaling-and-squaring
/// Pade otherwise.
class Semigroup {
 public:
  explicit Semigroup(LinOp generator);

  const LinOp& generator() const { return generator_; }
  Matrix at(double t) const;
  Vector apply(double t, const Vector& v) const;
  bool uses_eigendecomposition() const { return eigen_.has_value(); }

 private:
  struct Diagonalization {
    Vector values;
    Matrix vectors;
    Matrix inverse;
  };
  LinOp generator_;
  std::optional<Diagonalization> eigen_;
};

/// Tolerance-based subspace equality via projector difference.
bool same_subspace(const WeightedSpace& space, const Matrix& a, const Matrix& b, double tol);

// ---------------------------------------------------------------------------

template <typename F>
LinOp symmetric_function(const LinOp& op, F&& f) {
  Matrix m = op.space.to_euclidean(op.matrix);
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Eigen::VectorXd vals = es.eigenvalues();
  Vector mapped(vals.size());
  for (Index i = 0; i < vals.size(); ++i) mapped(i) = f(vals(i));
  const Matrix& q = es.eigenvectors();
  Matrix out = q * mapped.asDiagonal() * q.adjoint();
  return LinOp(op.space, op.space.from_euclidean(out));
}

}  // namespace hypoflow
