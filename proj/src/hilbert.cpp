#include "hypoflow/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hypoflow/error.hpp"
#include "hypoflow/expm.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "hilbert-core";

Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

void require_square(const Matrix& m, Index dim) {
  if (m.rows() != dim || m.cols() != dim)
    throw Error(kModule, "matrix dimensions do not match space dimension");
}

// Rotate each column so its largest entry (first index on ties) is real positive.
void fix_phases(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, j));
      if (a > best_abs * (1.0 + 1e-12)) {
        best_abs = a;
        best = i;
      }
    }
    if (best_abs > 0.0) basis.col(j) *= std::conj(basis(best, j)) / best_abs;
  }
}

}  // namespace

// --- WeightedSpace ---------------------------------------------------------

struct WeightedSpace::Data {
  Matrix gram;
  Matrix factor;  // upper triangular R, gram = R^H R
  Field field = Field::complex;
  bool identity = false;
};

WeightedSpace::WeightedSpace(Matrix gram, Field field) {
  if (gram.rows() == 0 || gram.rows() != gram.cols())
    throw Error(kModule, "gram must be a non-empty square matrix");
  if (!gram.allFinite()) throw Error(kModule, "non-finite inputs");
  const double fro = gram.norm();
  if ((gram - gram.adjoint()).norm() > 1e-12 * fro) throw Error(kModule, "gram is not Hermitian");

  auto data = std::make_shared<Data>();
  data->field = field;
  data->gram = 0.5 * (gram + gram.adjoint());
  const Index n = gram.rows();
  data->identity = (data->gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0;

  Eigen::SelfAdjointEigenSolver<Matrix> es(data->gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || lo < 1e-14 * hi) throw Error(kModule, "degenerate metric");

  Eigen::LLT<Matrix> llt(data->gram);
  if (llt.info() != Eigen::Success) throw Error(kModule, "degenerate metric");
  data->factor = llt.matrixU();
  data_ = std::move(data);
}

WeightedSpace WeightedSpace::euclidean(Index dim, Field field) {
  return WeightedSpace(Matrix::Identity(dim, dim), field);
}

Index WeightedSpace::dim() const { return data_->gram.rows(); }
Field WeightedSpace::field() const { return data_->field; }
const Matrix& WeightedSpace::gram() const { return data_->gram; }
const Matrix& WeightedSpace::factor() const { return data_->factor; }

Scalar WeightedSpace::inner(const Vector& x, const Vector& y) const {
  if (data_->identity) return x.dot(y);
  return x.dot(data_->gram * y);
}

double WeightedSpace::norm(const Vector& x) const {
  if (data_->identity) return x.norm();
  return (data_->factor.triangularView<Eigen::Upper>() * x).norm();
}

Matrix WeightedSpace::whiten(const Matrix& x) const {
  if (data_->identity) return x;
  return data_->factor.triangularView<Eigen::Upper>() * x;
}

Matrix WeightedSpace::unwhiten(const Matrix& y) const {
  if (data_->identity) return y;
  return data_->factor.triangularView<Eigen::Upper>().solve(y);
}

Matrix WeightedSpace::to_euclidean(const Matrix& a) const {
  if (data_->identity) return a;
  Matrix ra = data_->factor.triangularView<Eigen::Upper>() * a;
  data_->factor.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(ra);
  return ra;
}

Matrix WeightedSpace::from_euclidean(const Matrix& m) const {
  if (data_->identity) return m;
  Matrix out = data_->factor.triangularView<Eigen::Upper>().solve(m);
  out = out * data_->factor.triangularView<Eigen::Upper>();
  return out;
}

bool WeightedSpace::same_as(const WeightedSpace& other) const {
  if (data_ == other.data_) return true;
  return dim() == other.dim() && data_->gram == other.data_->gram;
}

// --- LinOp -----------------------------------------------------------------

LinOp::LinOp(WeightedSpace s, Matrix m) : space(std::move(s)), matrix(std::move(m)) {
  require_square(matrix, space.dim());
}

namespace {
void require_same_space(const LinOp& a, const LinOp& b) {
  if (!a.space.same_as(b.space)) throw Error(kModule, "operators act on different spaces");
}
}  // namespace

LinOp LinOp::operator+(const LinOp& rhs) const {
  require_same_space(*this, rhs);
  return LinOp(space, matrix + rhs.matrix);
}

LinOp LinOp::operator-(const LinOp& rhs) const {
  require_same_space(*this, rhs);
  return LinOp(space, matrix - rhs.matrix);
}

LinOp LinOp::operator*(const LinOp& rhs) const {
  require_same_space(*this, rhs);
  return LinOp(space, matrix * rhs.matrix);
}

LinOp LinOp::scaled(Scalar s) const { return LinOp(space, s * matrix); }

LinOp identity(const WeightedSpace& space) {
  return LinOp(space, Matrix::Identity(space.dim(), space.dim()));
}

LinOp zero(const WeightedSpace& space) { return LinOp(space, Matrix::Zero(space.dim(), space.dim())); }

double weighted_norm(const LinOp& op) { return spectral_norm(op.space.to_euclidean(op.matrix)); }

// --- adjoint / symmetry ----------------------------------------------------

LinOp adjoint(const LinOp& op) {
  const Matrix m = op.space.to_euclidean(op.matrix);
  return LinOp(op.space, op.space.from_euclidean(m.adjoint()));
}

SymmetryReport symmetry_check(const LinOp& op, double tol) {
  if (!(tol > 0.0)) throw Error(kModule, "tolerance must be positive");
  const Matrix m = op.space.to_euclidean(op.matrix);
  const double scale = spectral_norm(m);
  SymmetryReport report;
  if (scale > 0.0) {
    report.symmetric_residual = spectral_norm(m.adjoint() - m) / scale;
    report.antisymmetric_residual = spectral_norm(m.adjoint() + m) / scale;
  }
  if (report.symmetric_residual < tol)
    report.kind = Symmetry::symmetric;
  else if (report.antisymmetric_residual < tol)
    report.kind = Symmetry::antisymmetric;
  else
    report.kind = Symmetry::neither;
  return report;
}

// --- kernels and projectors ------------------------------------------------

Matrix kernel_basis(const LinOp& op, double tol) {
  if (!(tol > 0.0)) throw Error(kModule, "tolerance must be positive");
  const Index n = op.dim();
  const Matrix m = op.space.to_euclidean(op.matrix);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double threshold = tol * (s.size() ? s(0) : 0.0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > threshold) ++rank;
  Matrix y = svd.matrixV().rightCols(n - rank);
  fix_phases(y);
  return op.space.unwhiten(y);
}

LinOp projector(const WeightedSpace& space, const Matrix& basis) {
  const Index n = space.dim();
  if (basis.cols() == 0) return zero(space);
  if (basis.rows() != n) throw Error(kModule, "basis has wrong row count");
  const Matrix y = space.whiten(basis);
  const Matrix overlap = y.adjoint() * y;
  const Index k = basis.cols();
  if ((overlap - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-8)
    throw Error(kModule, "basis not orthonormal");
  return LinOp(space, basis * basis.adjoint() * space.gram());
}

LinOp kernel_projector(const LinOp& op, double tol) { return projector(op.space, kernel_basis(op, tol)); }

Matrix orthonormalize(const WeightedSpace& space, const Matrix& vectors, double tol) {
  Matrix y = space.whiten(vectors);
  double scale = 0.0;
  for (Index j = 0; j < y.cols(); ++j) scale = std::max(scale, y.col(j).norm());
  Matrix kept(y.rows(), 0);
  for (Index j = 0; j < y.cols(); ++j) {
    Vector c = y.col(j);
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < kept.cols(); ++i) c -= kept.col(i) * kept.col(i).dot(c);
    const double nrm = c.norm();
    if (nrm <= tol * scale || nrm == 0.0) continue;
    kept.conservativeResize(Eigen::NoChange, kept.cols() + 1);
    kept.col(kept.cols() - 1) = c / nrm;
  }
  return space.unwhiten(kept);
}

Matrix complement_basis(const WeightedSpace& space, const Matrix& basis) {
  const Index n = space.dim();
  const Index k = basis.cols();
  if (k == 0) return space.unwhiten(Matrix::Identity(n, n));
  const Matrix y = space.whiten(basis);
  Eigen::HouseholderQR<Matrix> qr(y);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix rest = q.rightCols(n - k);
  fix_phases(rest);
  return space.unwhiten(rest);
}

bool same_subspace(const WeightedSpace& space, const Matrix& a, const Matrix& b, double tol) {
  if (a.cols() != b.cols()) return false;
  if (a.cols() == 0) return true;
  const LinOp diff = projector(space, a) - projector(space, b);
  return weighted_norm(diff) <= tol;
}

// --- spectra ---------------------------------------------------------------

std::vector<Scalar> sorted_eigenvalues(const LinOp& op) {
  const Matrix m = op.space.to_euclidean(op.matrix);
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw Error(kModule, "eigensolver failed");
  const Vector& vals = es.eigenvalues();
  std::vector<Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (vals(a).real() != vals(b).real()) return vals(a).real() < vals(b).real();
    return vals(a).imag() < vals(b).imag();
  });
  std::vector<Scalar> out;
  out.reserve(order.size());
  for (Index i : order) out.push_back(vals(i));
  return out;
}

SpectralReport spectral_gap(const LinOp& op, double tol) {
  if (!(tol > 0.0)) throw Error(kModule, "tolerance must be positive");
  SpectralReport report;
  report.eigenvalues = sorted_eigenvalues(op);
  const double scale = weighted_norm(op);
  const double threshold = tol * std::max(scale, std::numeric_limits<double>::min());
  report.tolerance_used = threshold;

  double gap = std::numeric_limits<double>::infinity();
  for (const Scalar& lambda : report.eigenvalues) {
    if (lambda.real() > threshold) throw Error(kModule, "not dissipative");
    if (std::abs(lambda) <= threshold) {
      ++report.kernel_dim;
      continue;
    }
    gap = std::min(gap, -lambda.real());
  }
  if (!std::isfinite(gap)) throw Error(kModule, "gap undefined: empty nonzero spectrum");
  report.gap = std::max(gap, 0.0);
  return report;
}

double singular_value_gap(const LinOp& op, double tol) {
  if (!(tol > 0.0)) throw Error(kModule, "tolerance must be positive");
  const Eigen::VectorXd s = singular_values(op.space.to_euclidean(op.matrix));
  if (s.size() == 0 || s(0) == 0.0) throw Error(kModule, "gap undefined: empty nonzero spectrum");
  const double threshold = tol * s(0);
  double smallest = s(0);
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > threshold) smallest = std::min(smallest, s(i));
  return smallest;
}

LinOp pseudo_inverse(const LinOp& op, double tol) {
  if (symmetry_check(op, 1e-8).kind != Symmetry::symmetric)
    throw Error(kModule, "pseudoinverse requires symmetric operator");
  Matrix m = op.space.to_euclidean(op.matrix);
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double scale = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
  Vector inv(vals.size());
  for (Index i = 0; i < vals.size(); ++i)
    inv(i) = std::abs(vals(i)) > tol * scale && scale > 0.0 ? 1.0 / vals(i) : 0.0;
  const Matrix& q = es.eigenvectors();
  return LinOp(op.space, op.space.from_euclidean(q * inv.asDiagonal() * q.adjoint()));
}

// --- semigroups ------------------------------------------------------------

Semigroup::Semigroup(LinOp generator) : generator_(std::move(generator)) {
  if (!generator_.matrix.allFinite()) throw Error(kModule, "non-finite inputs");
  const Matrix m = generator_.space.to_euclidean(generator_.matrix);
  if (m.rows() == 0) return;
  Eigen::ComplexEigenSolver<Matrix> es(m, true);
  if (es.info() != Eigen::Success) return;
  const Eigen::VectorXd s = singular_values(es.eigenvectors());
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || s(0) / smin >= 1e6) return;
  Eigen::PartialPivLU<Matrix> lu(es.eigenvectors());
  eigen_ = Diagonalization{es.eigenvalues(), es.eigenvectors(), lu.inverse()};
}

Matrix Semigroup::at(double t) const {
  if (!std::isfinite(t)) throw Error(kModule, "non-finite inputs");
  if (t < 0.0) throw Error(kModule, "semigroup time must be nonnegative");
  const Index n = generator_.dim();
  if (t == 0.0) return Matrix::Identity(n, n);
  if (eigen_) {
    Vector phase(eigen_->values.size());
    for (Index i = 0; i < phase.size(); ++i) phase(i) = std::exp(t * eigen_->values(i));
    const Matrix m = eigen_->vectors * phase.asDiagonal() * eigen_->inverse;
    return generator_.space.from_euclidean(m);
  }
  return expm(t * generator_.matrix);
}

Vector Semigroup::apply(double t, const Vector& v) const {
  if (!v.allFinite()) throw Error(kModule, "non-finite inputs");
  if (t == 0.0) return v;
  return at(t) * v;
}

Vector semigroup_apply(const LinOp& op, double t, const Vector& v) {
  if (!std::isfinite(t) || !v.allFinite() || !op.matrix.allFinite())
    throw Error(kModule, "non-finite inputs");
  if (t < 0.0) throw Error(kModule, "semigroup time must be nonnegative");
  if (v.size() != op.dim()) throw Error(kModule, "vector dimension mismatch");
  if (t == 0.0) return v;
  return expm(t * op.matrix) * v;
}

RelaxationReport relaxation_time(const LinOp& op, const RelaxationOptions& options) {
  spectral_gap(op, options.tol);  // dissipativity check
  RelaxationReport report;
  report.singular_gap = singular_value_gap(op, options.tol);
  report.lower_bound = 1.0 / (2.0 * report.singular_gap);

  const LinOp complement = identity(op.space) - kernel_projector(op, options.tol);
  const Semigroup semigroup(op);
  const double target = std::exp(-1.0);
  auto decay = [&](double t) {
    return weighted_norm(LinOp(op.space, semigroup.at(t) * complement.matrix));
  };

  double lo = 0.0;
  double hi = 1.0 / report.singular_gap;
  while (decay(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > options.t_max) throw Error(kModule, "did not relax");
  }
  while (hi - lo > options.rel_precision * hi) {
    const double mid = 0.5 * (lo + hi);
    if (decay(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  report.t_rel = hi;
  if (report.t_rel < report.lower_bound * (1.0 - 1e-6))
    throw Error(kModule, "relaxation time below singular-gap bound");
  return report;
}

}  // namespace hypoflow
