#include "hypoflow/classical.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hypoflow/error.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "classical-models";

using RealMatrix = Eigen::MatrixXd;

void require_size(int n, const char* what) {
  if (n < 2) throw Error(kModule, std::string(what) + " must be at least 2");
}

// Raw trigonometric functions 1, cos x, sin x, cos 2x, sin 2x, ...
double trig(int j, double x) {
  if (j == 0) return 1.0;
  const int k = (j + 1) / 2;
  return (j % 2 == 1) ? std::cos(k * x) : std::sin(k * x);
}

double trig_derivative(int j, double x) {
  if (j == 0) return 0.0;
  const int k = (j + 1) / 2;
  return (j % 2 == 1) ? -k * std::sin(k * x) : k * std::cos(k * x);
}

XBasis hermite_basis(double m, int n_x) {
  // phi_i(x) = He_i(sqrt(m) x) / sqrt(i!) is orthonormal for N(0, 1/m).
  XBasis basis;
  basis.derivative = RealMatrix::Zero(n_x, n_x);
  for (int i = 1; i < n_x; ++i) basis.derivative(i - 1, i) = std::sqrt(m * i);
  // U' phi_i = sqrt(m) (sqrt(i+1) phi_{i+1} + sqrt(i) phi_{i-1})
  basis.force = basis.derivative + basis.derivative.transpose();
  basis.stiffness = RealMatrix::Zero(n_x, n_x);
  for (int i = 0; i < n_x; ++i) basis.stiffness(i, i) = m * i;
  return basis;
}

struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // normalized density e^{-U} / Z
};

Quadrature torus_quadrature(const PotentialSpec& potential, int points) {
  Quadrature q;
  q.nodes.resize(points);
  q.weights.resize(points);
  double u_min = std::numeric_limits<double>::infinity();
  for (int p = 0; p < points; ++p) {
    q.nodes(p) = 2.0 * std::numbers::pi * p / points;
    q.weights(p) = potential.value(q.nodes(p));
    u_min = std::min(u_min, q.weights(p));
  }
  // shift by min U to keep e^{-U} representable
  for (int p = 0; p < points; ++p) q.weights(p) = std::exp(-(q.weights(p) - u_min));
  const double z = q.weights.sum();
  if (!std::isfinite(z) || !(z > 0.0)) throw Error(kModule, "quadrature failure: e^{-U} not integrable");
  q.weights /= z;
  return q;
}

XBasis fourier_basis(const PotentialSpec& potential, int n_x) {
  const int highest = n_x / 2;
  double amplitude = 0.0;
  for (const auto& c : potential.coefficients()) amplitude += std::abs(c);
  // at least 8x oversampling of the highest mode present in the integrands,
  // then refine until the normalized moments stop moving
  int points = 8 * (2 * (highest + potential.max_mode()) + 1);
  points = std::max(points, 256);
  points = std::max(points, static_cast<int>(16.0 * amplitude * std::max(1, potential.max_mode())));

  auto assemble = [&](int npts) {
    const Quadrature q = torus_quadrature(potential, npts);
    RealMatrix g(npts, n_x), dg(npts, n_x);
    Eigen::VectorXd force(npts);
    for (int p = 0; p < npts; ++p) {
      force(p) = potential.derivative(q.nodes(p));
      for (int j = 0; j < n_x; ++j) {
        g(p, j) = trig(j, q.nodes(p));
        dg(p, j) = trig_derivative(j, q.nodes(p));
      }
    }
    const RealMatrix wg = q.weights.asDiagonal() * g;
    RealMatrix raw_gram = g.transpose() * wg;
    Eigen::LLT<RealMatrix> llt(raw_gram);
    if (llt.info() != Eigen::Success) throw Error(kModule, "quadrature failure: degenerate Fourier basis");
    // phi = g C with C = L^{-T}
    const RealMatrix c =
        llt.matrixL().transpose().solve(RealMatrix::Identity(n_x, n_x));
    XBasis basis;
    basis.derivative = c.transpose() * (wg.transpose() * dg) * c;
    basis.force = c.transpose() * (g.transpose() * (q.weights.cwiseProduct(force)).asDiagonal() * g) * c;
    basis.stiffness = c.transpose() * (dg.transpose() * q.weights.asDiagonal() * dg) * c;
    basis.quadrature_points = npts;
    if (!basis.derivative.allFinite() || !basis.force.allFinite() || !basis.stiffness.allFinite())
      throw Error(kModule, "quadrature failure: non-finite overlap integrals");
    return basis;
  };

  XBasis basis = assemble(points);
  for (int refine = 0; refine < 6; ++refine) {
    XBasis finer = assemble(2 * points);
    const double change = (finer.stiffness - basis.stiffness).norm() / std::max(1.0, finer.stiffness.norm());
    basis = std::move(finer);
    points *= 2;
    if (change < 1e-13) return basis;
  }
  throw Error(kModule, "quadrature failure: overlap integrals did not converge");
}

}  // namespace

// --- PotentialSpec ---------------------------------------------------------

PotentialSpec PotentialSpec::quadratic(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(kModule, "quadratic potential requires m > 0");
  PotentialSpec p;
  p.kind_ = Kind::quadratic;
  p.m_ = m;
  return p;
}

PotentialSpec PotentialSpec::periodic(std::vector<std::complex<double>> coefficients) {
  if (coefficients.size() % 2 != 1) throw Error(kModule, "malformed periodic coefficients: need 2K+1 entries");
  const int k_max = static_cast<int>(coefficients.size() / 2);
  double scale = 0.0;
  for (const auto& c : coefficients) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw Error(kModule, "malformed periodic coefficients: non-finite entry");
    scale = std::max(scale, std::abs(c));
  }
  for (int k = 0; k <= k_max; ++k) {
    const auto& plus = coefficients[static_cast<std::size_t>(k_max + k)];
    const auto& minus = coefficients[static_cast<std::size_t>(k_max - k)];
    if (std::abs(plus - std::conj(minus)) > 1e-12 * std::max(1.0, scale))
      throw Error(kModule, "malformed periodic coefficients: U must be real (conjugate-symmetric coefficients)");
  }
  PotentialSpec p;
  p.kind_ = Kind::periodic;
  p.m_ = 0.0;
  p.coefficients_ = std::move(coefficients);
  return p;
}

PotentialSpec PotentialSpec::periodic_free() { return periodic({std::complex<double>(0.0)}); }

PotentialSpec PotentialSpec::periodic_cosine(double amplitude) {
  return periodic({amplitude / 2.0, 0.0, amplitude / 2.0});
}

double PotentialSpec::value(double x) const {
  if (kind_ == Kind::quadratic) return 0.5 * m_ * x * x;
  const int k_max = max_mode();
  double u = coefficients_[static_cast<std::size_t>(k_max)].real();
  for (int k = 1; k <= k_max; ++k) {
    const auto& c = coefficients_[static_cast<std::size_t>(k_max + k)];
    u += 2.0 * (c.real() * std::cos(k * x) - c.imag() * std::sin(k * x));
  }
  return u;
}

double PotentialSpec::derivative(double x) const {
  if (kind_ == Kind::quadratic) return m_ * x;
  const int k_max = max_mode();
  double du = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    const auto& c = coefficients_[static_cast<std::size_t>(k_max + k)];
    du += 2.0 * k * (-c.real() * std::sin(k * x) - c.imag() * std::cos(k * x));
  }
  return du;
}

double PotentialSpec::second_derivative(double x) const {
  if (kind_ == Kind::quadratic) return m_;
  const int k_max = max_mode();
  double d2u = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    const auto& c = coefficients_[static_cast<std::size_t>(k_max + k)];
    d2u += 2.0 * k * k * (-c.real() * std::cos(k * x) + c.imag() * std::sin(k * x));
  }
  return d2u;
}

double PotentialSpec::curvature_bound() const {
  if (kind_ == Kind::quadratic) return m_;
  const int k_max = max_mode();
  double bound = 0.0;
  for (int k = 1; k <= k_max; ++k) bound += 2.0 * k * k * std::abs(coefficients_[static_cast<std::size_t>(k_max + k)]);
  return bound;
}

std::string PotentialSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (kind_ == Kind::quadratic) {
    out << "quadratic(m=" << m_ << ")";
  } else {
    out << "periodic(K=" << max_mode() << ")";
  }
  return out.str();
}

// --- builders --------------------------------------------------------------

int effective_n_x(const PotentialSpec& potential, int n_x) {
  if (potential.kind() == PotentialSpec::Kind::periodic && n_x % 2 == 0) return n_x + 1;
  return n_x;
}

XBasis build_x_basis(const PotentialSpec& potential, int n_x) {
  require_size(n_x, "n_x");
  n_x = effective_n_x(potential, n_x);
  if (potential.kind() == PotentialSpec::Kind::quadratic) return hermite_basis(potential.curvature(), n_x);
  return fourier_basis(potential, n_x);
}

GeneratorDecomposition build_langevin(const PotentialSpec& potential, int n_x, int n_v, double gamma) {
  require_size(n_x, "n_x");
  require_size(n_v, "n_v");
  n_x = effective_n_x(potential, n_x);
  const XBasis xb = build_x_basis(potential, n_x);
  const Index dim = static_cast<Index>(n_x) * n_v;
  auto idx = [n_v](int i, int k) { return static_cast<Index>(i) * n_v + k; };

  RealMatrix la = RealMatrix::Zero(dim, dim);
  RealMatrix ls = RealMatrix::Zero(dim, dim);
  std::vector<BasisLabel> meta(static_cast<std::size_t>(dim));
  const RealMatrix lowering = xb.derivative - xb.force;  // = -derivative^T for exact integrals
  for (int i = 0; i < n_x; ++i) {
    for (int k = 0; k < n_v; ++k) {
      const Index col = idx(i, k);
      meta[static_cast<std::size_t>(col)] = BasisLabel{i, k};
      ls(col, col) = -static_cast<double>(k);
      for (int j = 0; j < n_x; ++j) {
        // v phi_i' He_k: raises k
        if (k + 1 < n_v) la(idx(j, k + 1), col) += std::sqrt(k + 1.0) * xb.derivative(j, i);
        // v phi_i' He_k (lowering part) - U' phi_i d_v He_k
        if (k >= 1) la(idx(j, k - 1), col) += std::sqrt(static_cast<double>(k)) * lowering(j, i);
      }
    }
  }
  const RealMatrix symmetric_part = 0.5 * (la + la.transpose());
  const double defect = symmetric_part.size() ? Eigen::BDCSVD<RealMatrix>(symmetric_part).singularValues()(0) : 0.0;
  la = 0.5 * (la - la.transpose());

  const WeightedSpace space = WeightedSpace::euclidean(dim, Field::real);
  GeneratorDecomposition d = make_decomposition(LinOp(space, la.cast<Scalar>()), LinOp(space, ls.cast<Scalar>()),
                                                gamma, std::move(meta));
  d.antisymmetrization_defect = defect;
  const Vector constant = Vector::Unit(dim, 0);
  if (d.l_a.apply(constant).norm() > 1e-12 || d.l_s.apply(constant).norm() > 1e-12)
    throw Error(kModule, "constant function is not invariant");
  return d;
}

LinOp build_overdamped(const PotentialSpec& potential, int n_x) {
  require_size(n_x, "n_x");
  n_x = effective_n_x(potential, n_x);
  const XBasis xb = build_x_basis(potential, n_x);
  RealMatrix lo = -0.5 * (xb.stiffness + xb.stiffness.transpose());
  return LinOp(WeightedSpace::euclidean(n_x, Field::real), lo.cast<Scalar>());
}

PoincareEstimate poincare_constant(const PotentialSpec& potential, int n_x) {
  PoincareEstimate est;
  est.n_x = n_x;
  est.value = spectral_gap(build_overdamped(potential, n_x)).gap;
  est.refined_value = spectral_gap(build_overdamped(potential, 2 * n_x)).gap;
  est.relative_change = std::abs(est.refined_value - est.value) / est.refined_value;
  est.converged = est.relative_change <= 1e-4;
  return est;
}

}  // namespace hypoflow
