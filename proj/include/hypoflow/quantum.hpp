#pragma once

// Finite-dimensional Lindbladians in the Heisenberg picture under the KMS
// geometry. Operators are vectorized by column stacking, so the
// superoperator of X -> A X B is kron(B^T, A).

#include <string>
#include <vector>

#include "hypoflow/decomposition.hpp"
#include "hypoflow/hilbert.hpp"

namespace hypoflow {

struct LindbladModel {
  Matrix hamiltonian;
  std::vector<Matrix> jumps;
  double gamma = 1.0;

  Index dim() const { return hamiltonian.rows(); }
  /// Throws hypoflow::Error unless H is Hermitian (1e-12), there is at least
  /// one jump, and all shapes agree.
  void validate() const;
};

struct DensityMatrix {
  Matrix matrix;
  /// Checks trace 1 and eigenvalues >= -1e-12.
  void validate() const;
};

struct StationaryState {
  DensityMatrix sigma;
  bool unique = false;     // kernel of the Schrodinger generator is one-dimensional
  bool full_rank = false;  // min eigenvalue of sigma > tol
  Index kernel_dim = 0;
  double residual = 0.0;   // ||L^dagger sigma||
};

Vector vec(const Matrix& a);
Matrix unvec(const Vector& v, Index d);

/// Superoperator of X -> i[H, X].
Matrix hamiltonian_superoperator(const Matrix& h);
/// Superoperator of X -> sum_j L_j^dag [X, L_j] + [L_j^dag, X] L_j.
Matrix dissipator_superoperator(const std::vector<Matrix>& jumps);
/// Full Heisenberg generator i[H, .] + gamma * dissipator.
Matrix heisenberg_superoperator(const LindbladModel& model);
/// Schrodinger generator, the Hilbert-Schmidt adjoint of the Heisenberg one.
Matrix schrodinger_superoperator(const LindbladModel& model);

StationaryState stationary_state(const LindbladModel& model, double tol = 1e-10);

/// Weighted space over vec(d x d) with <A, B>_sigma = tr(sigma^{1/2} A^dag sigma^{1/2} B).
WeightedSpace kms_space(const DensityMatrix& sigma);

/// Principal square root of a Hermitian PSD matrix (eigenvalue floor 1e-12).
Matrix hermitian_sqrt(const Matrix& a);

/// L_a = i[H, .], L_s = dissipator, on kms_space(sigma). Rejects models whose
/// parts are not (anti)symmetric in the KMS metric to 1e-8.
GeneratorDecomposition build_lindblad_heisenberg(const LindbladModel& model, const DensityMatrix& sigma);

struct DetailedBalanceReport {
  bool holds = false;
  double residual = 0.0;  // ||L* - L|| / ||L|| in the KMS metric
};

enum class BalanceTarget { full_generator, dissipative_part };

DetailedBalanceReport check_detailed_balance(const LindbladModel& model, const DensityMatrix& sigma, double tol,
                                             BalanceTarget target = BalanceTarget::full_generator);

struct CommutantKernels {
  Matrix ker_ls_basis;  // KMS-orthonormal, {A : [L_j, A] = [L_j^dag, A] = 0}
  Matrix ker_l_basis;   // additionally [H, A] = 0
};

/// Kernels from commutation relations; cross-checked against kernel_basis of
/// the built generators (tolerance 1e-9).
CommutantKernels commutant_kernel(const LindbladModel& model, const DensityMatrix& sigma);

// Pauli matrices: sigma_- = |1><0| lowers the sigma_z = diag(1, -1) eigenvalue.
Matrix pauli(char symbol);
/// Tensor product of single-qubit factors, e.g. "XX", "IZ", "+I".
Matrix pauli_string(const std::string& word);
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace hypoflow
