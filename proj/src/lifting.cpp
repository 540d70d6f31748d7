#include "hypoflow/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hypoflow/error.hpp"
#include "hypoflow/parallel.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "lifting-analysis";

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_singular(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

// Gram matrix of two column families in the weighted inner product.
Matrix cross_gram(const WeightedSpace& space, const Matrix& x, const Matrix& y) { return x.adjoint() * space.gram() * y; }

double php_norm(const GeneratorDecomposition& d) { return weighted_norm(d.pi_s * d.l_a * d.pi_s); }

OverdampedLimit build_limit(const GeneratorDecomposition& decomp, const LinOp& s_op, bool strict) {
  const WeightedSpace& space = decomp.space();
  const Matrix basis = kernel_basis(decomp.l_s);
  if (basis.cols() == 0) throw Error(kModule, "ker(L_s) is trivial");
  const double scale = std::max(1.0, weighted_norm(decomp.l_a));

  const LinOp range_defect = (identity(space) - decomp.l_s * pseudo_inverse(decomp.l_s)) * decomp.l_a * decomp.pi_s;
  const double range_residual = weighted_norm(range_defect);
  if (strict && (php_norm(decomp) > 1e-8 * scale || range_residual > 1e-8 * scale))
    throw Error(kModule, "range condition fails - not a second-order lift");

  const Matrix image = decomp.l_a.matrix * basis;
  Matrix lo = -cross_gram(space, image, s_op.matrix * image);
  const double lo_scale = std::max(1.0, lo.norm());
  if (strict && (lo - lo.adjoint()).norm() > 1e-9 * lo_scale) throw Error(kModule, "L_O is not symmetric");
  lo = 0.5 * (lo + lo.adjoint()).eval();
  OverdampedLimit out{LinOp(WeightedSpace::euclidean(basis.cols(), space.field()), lo), basis, range_residual,
                      std::nullopt};

  if (lo.norm() > 1e-12 * scale * scale) {
    const SpectralReport gap = spectral_gap(out.generator);
    out.gap = gap.gap;
  }
  return out;
}

double gap_at(const GeneratorDecomposition& decomp, double gamma) { return spectral_gap(decomp.generator(gamma)).gap; }

}  // namespace

LinOp default_s_operator(const GeneratorDecomposition& decomp) { return pseudo_inverse(decomp.l_s.scaled(-1.0)); }

OverdampedLimit overdamped_limit(const GeneratorDecomposition& decomp) {
  return build_limit(decomp, default_s_operator(decomp), true);
}

OverdampedLimit overdamped_limit(const GeneratorDecomposition& decomp, const LinOp& s_op) {
  if (!s_op.space.same_as(decomp.space())) throw Error(kModule, "S acts on a different space");
  return build_limit(decomp, s_op, true);
}

LiftReport check_lift_conditions(const GeneratorDecomposition& decomp, const std::optional<LinOp>& s_op) {
  const WeightedSpace& space = decomp.space();
  const LinOp s = s_op ? *s_op : default_s_operator(decomp);
  if (!s.space.same_as(space)) throw Error(kModule, "S acts on a different space");

  LiftReport report;
  report.php_residual = php_norm(decomp);
  const SpectralReport ls_gap = spectral_gap(decomp.l_s);
  report.coercivity_lambda_s = ls_gap.gap;

  const Matrix basis = kernel_basis(decomp.l_s);
  const Matrix perp = complement_basis(space, basis);
  if (perp.cols() > 0) {
    Matrix restricted = cross_gram(space, perp, s.matrix * perp);
    restricted = 0.5 * (restricted + restricted.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(restricted, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      throw Error(kModule, "S not positive");
  }

  const OverdampedLimit limit = build_limit(decomp, s, false);
  report.collapsed_dim = basis.cols();
  report.overdamped_gap = limit.gap;

  const LinOp gen = decomp.generator();
  const Matrix ker_l = kernel_basis(gen);
  report.kernel_dim = ker_l.cols();
  const Matrix ker_o = basis * kernel_basis(limit.generator);
  report.kernel_equal = same_subspace(space, ker_o, ker_l, 1e-8);
  report.strict_subspace = ker_l.cols() < basis.cols();

  const Matrix image = gen.matrix * basis;
  const Matrix& lo = limit.generator.matrix;
  report.second_order_residual = spectral_norm(cross_gram(space, image, s.matrix * image) + lo);
  report.first_order_residual = spectral_norm(cross_gram(space, basis, image) + lo);

  // s_tilde_m: Pi_1 S Pi_1 restricted to ran(Pi_1) = closure of ran(L on H_O).
  const Matrix range = orthonormalize(space, decomp.l_a.matrix * basis);
  report.s_tilde_m = range.cols() > 0 ? min_singular(cross_gram(space, range, s.matrix * range)) : 0.0;
  return report;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw Error(kModule, "invalid log grid");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i) grid[i] = points == 1 ? lo : std::exp(a + (b - a) * i / (points - 1));
  return grid;
}

std::vector<double> default_gamma_grid(double lambda_o, int points) {
  const double r = std::sqrt(lambda_o);
  return log_grid(r / 16.0, 16.0 * r, points);
}

std::vector<double> default_t_grid(double nu, int points) { return log_grid(1e-3 / nu, 20.0 / nu, points); }

RateReport rate_scan(const GeneratorDecomposition& decomp, const RateScanOptions& options) {
  RateReport report;
  std::optional<LiftReport> lift;
  try {
    lift = check_lift_conditions(decomp);
  } catch (const Error&) {
  }
  if (lift) {
    report.overdamped_gap = lift->overdamped_gap;
    if (lift->s_tilde_m > kKernelTol) report.s_tilde_m = lift->s_tilde_m;
    if (report.overdamped_gap && report.s_tilde_m)
      report.ceiling = std::sqrt(*report.overdamped_gap / *report.s_tilde_m);
  }

  report.gamma_grid = options.gamma_grid;
  if (report.gamma_grid.empty()) {
    // Coercive models have no overdamped gap; centre on the gap of L_s instead.
    const double centre = report.overdamped_gap ? *report.overdamped_gap : spectral_gap(decomp.l_s).gap;
    report.gamma_grid = default_gamma_grid(centre);
  }
  for (double g : report.gamma_grid)
    if (!(g > 0.0) || !std::isfinite(g)) throw Error(kModule, "gamma grid must be positive");

  const std::size_t n = report.gamma_grid.size();
  report.spectral_gaps.assign(n, 0.0);
  report.singular_gaps.assign(n, 0.0);
  report.prefactors.assign(n, 1.0);
  report.prefactors_margined.assign(n, 1.05);
  report.monotone.assign(n, true);

  parallel_for(n, [&](std::size_t i) {
    const LinOp gen = decomp.generator(report.gamma_grid[i]);
    const double nu = spectral_gap(gen).gap;
    report.spectral_gaps[i] = nu;
    report.singular_gaps[i] = singular_value_gap(gen);
    if (!options.prefactors) return;

    const std::vector<double> times = options.t_grid.empty() ? default_t_grid(nu, options.t_points) : options.t_grid;
    const Matrix complement = identity(gen.space).matrix - kernel_projector(gen).matrix;
    const Semigroup semigroup(gen);
    double sup = 1.0, previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double t : times) {
      const double decay = weighted_norm(LinOp(gen.space, semigroup.at(t) * complement));
      if (decay > previous * (1.0 + 1e-9)) monotone = false;
      previous = decay;
      sup = std::max(sup, decay * std::exp(nu * t));
    }
    report.prefactors[i] = sup;
    report.prefactors_margined[i] = 1.05 * sup;
    report.monotone[i] = monotone;
  });

  const auto best = std::max_element(report.spectral_gaps.begin(), report.spectral_gaps.end());
  const std::size_t k = static_cast<std::size_t>(best - report.spectral_gaps.begin());
  report.argmax_gamma = report.gamma_grid[k];
  report.max_gap = *best;
  report.refined_gamma = report.argmax_gamma;
  report.refined_gap = report.max_gap;

  if (options.refine && n >= 2) {
    double lo = report.gamma_grid[k > 0 ? k - 1 : k];
    double hi = report.gamma_grid[k + 1 < n ? k + 1 : k];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    double fa = gap_at(decomp, a), fb = gap_at(decomp, b);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      if (fa >= fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - phi * (hi - lo);
        fa = gap_at(decomp, a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + phi * (hi - lo);
        fb = gap_at(decomp, b);
      }
    }
    const double g = 0.5 * (lo + hi);
    const double f = gap_at(decomp, g);
    if (f > report.refined_gap) {
      report.refined_gamma = g;
      report.refined_gap = f;
    }
  }
  return report;
}

double upper_bound(const LiftReport& lift, double prefactor_c) {
  if (!(prefactor_c >= 1.0)) throw Error(kModule, "prefactor must be >= 1");
  if (!(lift.s_tilde_m > kKernelTol) || !lift.overdamped_gap) throw Error(kModule, "upper bound degenerate");
  return (1.0 + std::log(prefactor_c)) * std::sqrt(*lift.overdamped_gap / lift.s_tilde_m);
}

double upper_bound(const GeneratorDecomposition& decomp, const std::optional<LinOp>& s_op, double prefactor_c) {
  return upper_bound(check_lift_conditions(decomp, s_op), prefactor_c);
}

RateBoundCheck check_rate_bounds(const RateReport& report, const LiftReport& lift) {
  RateBoundCheck out;
  const bool degenerate = !(lift.s_tilde_m > kKernelTol) || !lift.overdamped_gap;
  if (!degenerate) out.theorem_holds = true;
  for (std::size_t i = 0; i < report.gamma_grid.size(); ++i) {
    const double factor = 1.0 + std::log(report.prefactors[i]);
    const double lemma = factor * report.singular_gaps[i];
    const double lemma_ratio = report.spectral_gaps[i] / lemma;
    out.worst_lemma_ratio = std::max(out.worst_lemma_ratio, lemma_ratio);
    if (lemma_ratio > 1.0 + 1e-6) out.lemma_holds = false;
    if (!degenerate) {
      const double ratio = report.spectral_gaps[i] / upper_bound(lift, report.prefactors[i]);
      out.worst_theorem_ratio = std::max(out.worst_theorem_ratio, ratio);
      if (ratio > 1.0 + 1e-6) out.theorem_holds = false;
    }
  }
  return out;
}

double langevin_rate(double m, double gamma, double c) {
  if (!(m > 0.0) || !(gamma > 0.0) || !(c > 0.0)) throw Error(kModule, "rate formula parameters must be positive");
  const double s = std::sqrt(m) + gamma;
  return m * gamma / (c * s * s);
}

double quantum_rate(double lambda_s, double c1, double c2, double gamma) {
  if (!(lambda_s > 0.0) || !(c1 > 0.0) || !(c2 > 0.0) || !(gamma > 0.0))
    throw Error(kModule, "rate formula parameters must be positive");
  return gamma * lambda_s / (c1 * c1 + gamma * gamma * lambda_s * c2 * c2);
}

}  // namespace hypoflow
