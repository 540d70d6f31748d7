#include "hypoflow/quantum.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hypoflow/error.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "quantum-models";

// Euclidean null space of a (possibly rectangular) matrix, relative tolerance.
Matrix null_space(const Matrix& m, double tol) {
  const Index n = m.cols();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double threshold = tol * (s.size() ? s(0) : 0.0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > threshold) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

Matrix commutator_superoperator(const Matrix& a) {
  const Index d = a.rows();
  const Matrix id = Matrix::Identity(d, d);
  return kron(id, a) - kron(a.transpose(), id);
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix unvec(const Vector& v, Index d) {
  if (v.size() != d * d) throw Error(kModule, "unvec size mismatch");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

void LindbladModel::validate() const {
  const Index d = hamiltonian.rows();
  if (d == 0 || hamiltonian.cols() != d) throw Error(kModule, "hamiltonian must be a non-empty square matrix");
  if (!hamiltonian.allFinite()) throw Error(kModule, "non-finite hamiltonian");
  const double scale = std::max(1.0, hamiltonian.norm());
  if ((hamiltonian - hamiltonian.adjoint()).norm() > 1e-12 * scale) throw Error(kModule, "hamiltonian is not Hermitian");
  if (jumps.empty()) throw Error(kModule, "at least one jump operator is required");
  for (const Matrix& l : jumps) {
    if (l.rows() != d || l.cols() != d) throw Error(kModule, "jump operator shape mismatch");
    if (!l.allFinite()) throw Error(kModule, "non-finite jump operator");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(kModule, "gamma must be positive");
}

void DensityMatrix::validate() const {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) throw Error(kModule, "density matrix must be square");
  if ((matrix - matrix.adjoint()).norm() > 1e-12) throw Error(kModule, "density matrix is not Hermitian");
  if (std::abs(matrix.trace() - Scalar(1.0)) > 1e-12) throw Error(kModule, "density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) throw Error(kModule, "density matrix has negative eigenvalues");
}

Matrix hamiltonian_superoperator(const Matrix& h) { return Scalar(0.0, 1.0) * commutator_superoperator(h); }

Matrix dissipator_superoperator(const std::vector<Matrix>& jumps) {
  if (jumps.empty()) throw Error(kModule, "at least one jump operator is required");
  const Index d = jumps.front().rows();
  const Matrix id = Matrix::Identity(d, d);
  Matrix out = Matrix::Zero(d * d, d * d);
  for (const Matrix& l : jumps) {
    const Matrix ldl = l.adjoint() * l;
    out += 2.0 * kron(l.transpose(), l.adjoint()) - kron(id, ldl) - kron(ldl.transpose(), id);
  }
  return out;
}

Matrix heisenberg_superoperator(const LindbladModel& model) {
  model.validate();
  return hamiltonian_superoperator(model.hamiltonian) + model.gamma * dissipator_superoperator(model.jumps);
}

Matrix schrodinger_superoperator(const LindbladModel& model) { return heisenberg_superoperator(model).adjoint(); }

StationaryState stationary_state(const LindbladModel& model, double tol) {
  if (!(tol > 0.0)) throw Error(kModule, "tolerance must be positive");
  const Index d = model.dim();
  const Matrix gen = schrodinger_superoperator(model);
  const Matrix kernel = null_space(gen, tol);
  if (kernel.cols() == 0) throw Error(kModule, "no stationary state at tolerance");

  // Hilbert-Schmidt projection of the maximally mixed state onto the kernel.
  const Vector mixed = vec(Matrix::Identity(d, d) / static_cast<double>(d));
  Matrix rho = unvec(kernel * (kernel.adjoint() * mixed), d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const Scalar tr = rho.trace();
  if (std::abs(tr) < 1e-12) throw Error(kModule, "kernel element not a state");
  rho /= tr.real();

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  const double lowest = es.eigenvalues().minCoeff();
  if (lowest < -std::max(tol, 1e-12)) throw Error(kModule, "kernel element not a state");

  StationaryState out;
  out.sigma.matrix = rho;
  out.kernel_dim = kernel.cols();
  out.unique = kernel.cols() == 1;
  out.full_rank = lowest > tol;
  out.residual = (gen * vec(rho)).norm();
  return out;
}

Matrix hermitian_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXd vals = es.eigenvalues();
  for (Index i = 0; i < vals.size(); ++i) vals(i) = std::sqrt(std::max(vals(i), 1e-12));
  return es.eigenvectors() * vals.cast<Scalar>().asDiagonal() * es.eigenvectors().adjoint();
}

WeightedSpace kms_space(const DensityMatrix& sigma) {
  sigma.validate();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-12) throw Error(kModule, "KMS requires full-rank state");
  const Matrix root = hermitian_sqrt(sigma.matrix);
  // tr(S A^dag S B) = vec(A)^dag vec(S B S) = vec(A)^dag (S^T kron S) vec(B)
  return WeightedSpace(kron(root.transpose(), root), Field::complex);
}

GeneratorDecomposition build_lindblad_heisenberg(const LindbladModel& model, const DensityMatrix& sigma) {
  model.validate();
  const Index d = model.dim();
  if (sigma.matrix.rows() != d) throw Error(kModule, "state dimension does not match model");
  const WeightedSpace space = kms_space(sigma);

  LinOp l_a(space, hamiltonian_superoperator(model.hamiltonian));
  LinOp l_s(space, dissipator_superoperator(model.jumps));
  const double anti = symmetry_check(l_a, 1e-8).antisymmetric_residual;
  const double sym = symmetry_check(l_s, 1e-8).symmetric_residual;
  if (anti >= 1e-8 || sym >= 1e-8) throw Error(kModule, "model violates KMS (anti)symmetry assumptions");

  const Matrix schrodinger = (l_a.matrix + model.gamma * l_s.matrix).adjoint();
  if ((schrodinger * vec(sigma.matrix)).norm() > 1e-8) throw Error(kModule, "sigma is not stationary");
  const Vector identity_vec = vec(Matrix::Identity(d, d));
  if ((l_a.matrix * identity_vec).norm() > 1e-12 || (l_s.matrix * identity_vec).norm() > 1e-12)
    throw Error(kModule, "identity operator is not a fixed point");

  return make_decomposition(std::move(l_a), std::move(l_s), model.gamma, {}, 1e-8);
}

DetailedBalanceReport check_detailed_balance(const LindbladModel& model, const DensityMatrix& sigma, double tol,
                                             BalanceTarget target) {
  model.validate();
  const WeightedSpace space = kms_space(sigma);
  const Matrix gen = target == BalanceTarget::full_generator ? heisenberg_superoperator(model)
                                                             : dissipator_superoperator(model.jumps);
  const LinOp op(space, gen);
  const double scale = weighted_norm(op);
  DetailedBalanceReport report;
  report.residual = scale > 0.0 ? weighted_norm(adjoint(op) - op) / scale : 0.0;
  report.holds = report.residual < tol;
  return report;
}

CommutantKernels commutant_kernel(const LindbladModel& model, const DensityMatrix& sigma) {
  model.validate();
  const Index d = model.dim();
  const WeightedSpace space = kms_space(sigma);

  std::vector<Matrix> blocks;
  for (const Matrix& l : model.jumps) {
    blocks.push_back(commutator_superoperator(l));
    blocks.push_back(commutator_superoperator(l.adjoint()));
  }
  auto stack = [d](const std::vector<Matrix>& parts) {
    Matrix out(static_cast<Index>(parts.size()) * d * d, d * d);
    for (std::size_t i = 0; i < parts.size(); ++i) out.middleRows(static_cast<Index>(i) * d * d, d * d) = parts[i];
    return out;
  };

  CommutantKernels out;
  out.ker_ls_basis = orthonormalize(space, null_space(stack(blocks), kKernelTol));
  blocks.push_back(commutator_superoperator(model.hamiltonian));
  out.ker_l_basis = orthonormalize(space, null_space(stack(blocks), kKernelTol));

  // ker(L) must sit inside ker(L_s)
  if (out.ker_l_basis.cols() > 0) {
    const LinOp p_ls = projector(space, out.ker_ls_basis);
    if ((p_ls.matrix * out.ker_l_basis - out.ker_l_basis).norm() > 1e-9)
      throw Error(kModule, "kernel characterization violated");
  }

  const GeneratorDecomposition decomp = build_lindblad_heisenberg(model, sigma);
  const Matrix ker_ls = kernel_basis(decomp.l_s);
  const Matrix ker_l = kernel_basis(decomp.generator());
  if (!same_subspace(space, ker_ls, out.ker_ls_basis, 1e-9) || !same_subspace(space, ker_l, out.ker_l_basis, 1e-9))
    throw Error(kModule, "kernel characterization violated");
  return out;
}

Matrix pauli(char symbol) {
  Matrix p = Matrix::Zero(2, 2);
  switch (symbol) {
    case 'I':
      p(0, 0) = 1.0;
      p(1, 1) = 1.0;
      break;
    case 'X':
      p(0, 1) = 1.0;
      p(1, 0) = 1.0;
      break;
    case 'Y':
      p(0, 1) = Scalar(0.0, -1.0);
      p(1, 0) = Scalar(0.0, 1.0);
      break;
    case 'Z':
      p(0, 0) = 1.0;
      p(1, 1) = -1.0;
      break;
    case '+':
      p(0, 1) = 1.0;
      break;
    case '-':
      p(1, 0) = 1.0;
      break;
    default:
      throw Error(kModule, std::string("unknown Pauli symbol '") + symbol + "'");
  }
  return p;
}

Matrix pauli_string(const std::string& word) {
  if (word.empty()) throw Error(kModule, "empty Pauli string");
  Matrix out = pauli(word.front());
  for (std::size_t i = 1; i < word.size(); ++i) out = kron(out, pauli(word[i]));
  return out;
}

}  // namespace hypoflow
