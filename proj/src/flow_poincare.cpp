#include "hypoflow/flow_poincare.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "hypoflow/error.hpp"
#include "hypoflow/lifting.hpp"
#include "hypoflow/parallel.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "flow-poincare";

double quadratic_form(const WeightedSpace& space, const Vector& x, const Matrix& a) {
  return space.inner(x, a * x).real();
}

void check_horizon(double T, int quad_n) {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(kModule, "horizon T must be positive");
  if (quad_n < 16) throw Error(kModule, "quad_n must be at least 16");
}

// Everything about exp(t L_gamma) that the functionals need on [0, T].
struct FlowContext {
  LinOp generator;
  Matrix p_inf;
  Matrix complement;
  QuadratureRule rule;
  std::vector<Matrix> propagators;  // exp(t_q L) at the quadrature nodes

  FlowContext(const GeneratorDecomposition& decomp, double gamma, double T, int quad_n)
      : generator(decomp.generator(gamma)), p_inf(kernel_projector(generator).matrix) {
    complement = identity(generator.space).matrix - p_inf;
    rule = gauss_legendre(quad_n, T);
    const Semigroup semigroup(generator);
    propagators.reserve(rule.nodes.size());
    for (double t : rule.nodes) propagators.push_back(semigroup.at(t));
  }
};

SpaceTimeTerms evaluate_terms(const GeneratorDecomposition& decomp, double gamma, const FlowContext& ctx,
                              const Matrix& smoothing, const Vector& x0) {
  const WeightedSpace& space = decomp.space();
  const Matrix off_s = identity(space).matrix - decomp.pi_s.matrix;
  const QuadratureRule& rule = ctx.rule;

  std::vector<Vector> path;
  Vector mean = Vector::Zero(x0.size());
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    path.push_back(ctx.propagators[q] * x0);
    mean += rule.weights[q] * (ctx.p_inf * path.back());
  }

  SpaceTimeTerms out;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Vector& f = path[q];
    const Vector centred = f - mean;
    const Vector transport = ctx.generator.matrix * f - decomp.l_a.matrix * f;  // (d/dt - L_a) f
    const Vector dissipative = gamma * (decomp.l_s.matrix * f);
    const double w = rule.weights[q];
    out.lhs_norm += w * space.inner(centred, centred).real();
    const Vector fluctuation = off_s * centred;
    out.term1 += w * space.inner(fluctuation, fluctuation).real();
    const Vector a = smoothing * transport, b = smoothing * dissipative;
    out.term2 += w * space.inner(a, a).real();
    out.term2_identity += w * space.inner(b, b).real();
  }
  return out;
}

Matrix smoothing_operator(const GeneratorDecomposition& decomp) {
  return symmetric_function(decomp.l_s, [](double lambda) { return 1.0 / std::sqrt(1.0 - std::min(lambda, 0.0)); })
      .matrix;
}

std::vector<FlowSample> evaluate_ratios(const GeneratorDecomposition& decomp, double gamma, double T,
                                        const FlowContext& ctx, const std::vector<LabeledState>& x0_set) {
  const WeightedSpace& space = decomp.space();
  const Matrix minus_ls = -decomp.l_s.matrix;
  std::vector<FlowSample> samples;
  for (const LabeledState& state : x0_set) {
    FlowSample sample;
    sample.gamma = gamma;
    sample.horizon_T = T;
    sample.initial_label = state.label;
    const double original = space.norm(state.x0);
    const Vector x0 = ctx.complement * state.x0;
    if ((state.x0 - x0).norm() > 1e-10 * std::max(1.0, original))
      std::clog << "warning: " << kModule << ": initial state '" << state.label << "' projected off ker(L)\n";
    if (space.norm(x0) <= 1e-12 * std::max(1.0, original)) {
      sample.degenerate = true;
      sample.ratio = std::numeric_limits<double>::quiet_NaN();
      samples.push_back(sample);
      continue;
    }
    for (std::size_t q = 0; q < ctx.rule.nodes.size(); ++q) {
      const Vector x = ctx.propagators[q] * x0;
      sample.lhs += ctx.rule.weights[q] * space.inner(x, x).real();
      sample.dissipation += ctx.rule.weights[q] * quadratic_form(space, x, minus_ls);
    }
    sample.dissipation = std::max(sample.dissipation, 0.0);
    if (sample.dissipation < 1e-14 * sample.lhs) throw Error(kModule, "trajectory trapped in ker(L_s)");
    sample.ratio = sample.lhs / sample.dissipation;
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double T) {
  if (n < 1) throw Error(kModule, "quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guesses.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (x * p1 - p2) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1, 1] to [0, T]; weights normalized to average (sum 1).
    rule.nodes[i] = 0.5 * T * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * T * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

std::vector<LabeledState> default_initial_states(const GeneratorDecomposition& decomp, double gamma, int randoms,
                                                 std::uint64_t seed) {
  const WeightedSpace& space = decomp.space();
  const LinOp gen = decomp.generator(gamma);
  const Matrix complement = identity(space).matrix - kernel_projector(gen).matrix;

  std::vector<LabeledState> out;
  const Matrix collapsed = orthonormalize(space, complement * kernel_basis(decomp.l_s));
  for (Index j = 0; j < collapsed.cols(); ++j) out.push_back({"ho_" + std::to_string(j), collapsed.col(j)});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const bool complex = space.field() == Field::complex;
  for (int r = 0; r < randoms; ++r) {
    Vector x(space.dim());
    for (Index i = 0; i < x.size(); ++i) {
      const double re = normal(rng);
      x(i) = complex ? Scalar(re, normal(rng)) : Scalar(re, 0.0);
    }
    x = complement * x;
    const double norm = space.norm(x);
    if (norm > 0.0) x /= norm;
    out.push_back({"random_" + std::to_string(r), x});
  }
  return out;
}

double default_horizon(const GeneratorDecomposition& decomp) {
  const OverdampedLimit limit = overdamped_limit(decomp);
  if (!limit.gap) throw Error(kModule, "default horizon needs a positive overdamped gap");
  return 2.0 / std::sqrt(*limit.gap);
}

std::vector<FlowSample> flow_ratio(const GeneratorDecomposition& decomp, double gamma, double T,
                                   const std::vector<LabeledState>& x0_set, int quad_n) {
  check_horizon(T, quad_n);
  const FlowContext ctx(decomp, gamma, T, quad_n);
  return evaluate_ratios(decomp, gamma, T, ctx, x0_set);
}

double worst_ratio(const std::vector<FlowSample>& samples) {
  double worst = 0.0;
  for (const FlowSample& s : samples)
    if (!s.degenerate) worst = std::max(worst, s.ratio);
  return worst;
}

SpaceTimeTerms space_time_terms(const GeneratorDecomposition& decomp, double gamma, double T, const Vector& x0,
                                int quad_n) {
  check_horizon(T, quad_n);
  const FlowContext ctx(decomp, gamma, T, quad_n);
  return evaluate_terms(decomp, gamma, ctx, smoothing_operator(decomp), x0);
}

RatioFit fit_ratio_model(const std::vector<double>& gammas, const std::vector<double>& ratios) {
  if (gammas.size() != ratios.size()) throw Error(kModule, "gamma and ratio lists differ in length");
  if (gammas.size() < 4) throw Error(kModule, "fit needs at least 4 grid points");
  const Index n = static_cast<Index>(gammas.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Index i = 0; i < n; ++i) {
    const double r = ratios[i];
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(kModule, "non-finite flow ratio sample");
    design(i, 0) = 1.0 / r;
    design(i, 1) = gammas[i] * gammas[i] / r;
    rhs(i) = 1.0;
  }
  auto misfit = [&](double c1, double c2) {
    return std::sqrt((design * Eigen::Vector2d(c1, c2) - rhs).squaredNorm() / static_cast<double>(n));
  };

  RatioFit fit;
  const Eigen::Vector2d full = design.colPivHouseholderQr().solve(rhs);
  const double c1_only = design.col(0).dot(rhs) / design.col(0).squaredNorm();
  const double c2_only = design.col(1).dot(rhs) / design.col(1).squaredNorm();
  fit.residual_c1_only = misfit(c1_only, 0.0);
  if (full(0) >= 0.0 && full(1) >= 0.0) {
    fit.c1 = full(0);
    fit.c2 = full(1);
  } else if (misfit(c1_only, 0.0) <= misfit(0.0, c2_only)) {
    fit.c1 = c1_only;
  } else {
    fit.c2 = c2_only;
  }
  fit.residual = misfit(fit.c1, fit.c2);
  // A constant negligible against the other over the whole grid counts as zero.
  const double g_lo = *std::min_element(gammas.begin(), gammas.end());
  const double g_hi = *std::max_element(gammas.begin(), gammas.end());
  if (fit.c1 < 1e-10 * fit.c2 * g_lo * g_lo) fit.c1 = 0.0;
  if (fit.c2 * g_hi * g_hi < 1e-10 * fit.c1) fit.c2 = 0.0;
  if (!(fit.c1 > 0.0) || !(fit.c2 > 0.0))
    throw Error(kModule, "flow-Poincare model misfit (c1 = " + std::to_string(fit.c1) +
                             ", c2 = " + std::to_string(fit.c2) + ", residual = " + std::to_string(fit.residual) + ")");
  fit.gamma_max = std::sqrt(fit.c1 / fit.c2);
  fit.predicted_max = 1.0 / (2.0 * std::sqrt(fit.c1 * fit.c2));
  return fit;
}

double predicted_rate(const RatioFit& fit, double gamma) { return gamma / (fit.c1 + gamma * gamma * fit.c2); }

FlowFit fit_constants(const GeneratorDecomposition& decomp, const std::vector<double>& gamma_grid,
                      const FlowOptions& options) {
  if (gamma_grid.size() < 4) throw Error(kModule, "fit needs at least 4 grid points");
  FlowFit out;
  out.gamma_grid = gamma_grid;
  out.horizon_T = options.horizon ? *options.horizon : default_horizon(decomp);
  check_horizon(out.horizon_T, options.quad_n);

  const std::size_t n = gamma_grid.size();
  std::vector<std::vector<FlowSample>> per_gamma(n);
  std::vector<double> space_time(n, 0.0);
  const Matrix smoothing = smoothing_operator(decomp);
  parallel_for(n, [&](std::size_t i) {
    const double g = gamma_grid[i];
    const std::vector<LabeledState> states =
        options.x0_set.empty() ? default_initial_states(decomp, g, options.randoms, options.seed) : options.x0_set;
    const FlowContext ctx(decomp, g, out.horizon_T, options.quad_n);
    per_gamma[i] = evaluate_ratios(decomp, g, out.horizon_T, ctx, states);
    for (const LabeledState& s : states) {
      const SpaceTimeTerms terms = evaluate_terms(decomp, g, ctx, smoothing, s.x0);
      const double denom = std::sqrt(terms.term1) + std::sqrt(terms.term2);
      if (terms.lhs_norm > 0.0 && denom > 0.0) space_time[i] = std::max(space_time[i], std::sqrt(terms.lhs_norm) / denom);
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    const double worst = worst_ratio(per_gamma[i]);
    if (!(worst > 0.0)) throw Error(kModule, "no usable flow samples");
    out.worst_ratios.push_back(worst);
    out.samples.insert(out.samples.end(), per_gamma[i].begin(), per_gamma[i].end());
    out.space_time_a = std::max(out.space_time_a, space_time[i]);
  }
  out.fit = fit_ratio_model(gamma_grid, out.worst_ratios);
  for (double g : gamma_grid) out.predicted_rates.push_back(predicted_rate(out.fit, g));
  return out;
}

DecayCheck verify_decay(const GeneratorDecomposition& decomp, double gamma, double nu, double T,
                        const std::vector<LabeledState>& x0_set, double slack) {
  if (!(nu >= 0.0)) throw Error(kModule, "nu must be nonnegative");
  check_horizon(T, 16);
  const WeightedSpace& space = decomp.space();
  const LinOp gen = decomp.generator(gamma);
  const Matrix complement = identity(space).matrix - kernel_projector(gen).matrix;
  const Semigroup semigroup(gen);
  const double t_end = nu > 0.0 ? 10.0 / nu : 10.0 * T;
  const int steps = 200;
  const Matrix step = semigroup.at(t_end / steps);
  const QuadratureRule window = gauss_legendre(32, T);
  std::vector<Matrix> window_props;
  for (double s : window.nodes) window_props.push_back(semigroup.at(s));

  DecayCheck check;
  for (const LabeledState& state : x0_set) {
    const Vector x0 = complement * state.x0;
    const double norm0 = space.norm(x0);
    if (norm0 <= 0.0) continue;
    Vector xt = x0;
    for (int k = 0; k <= steps; ++k) {
      const double t = t_end * k / steps;
      if (k > 0) xt = step * xt;
      double average = 0.0;
      for (std::size_t q = 0; q < window.nodes.size(); ++q) {
        const Vector xs = window_props[q] * xt;
        average += window.weights[q] * space.inner(xs, xs).real();
      }
      const double averaged_violation = average - std::exp(-2.0 * nu * t) * norm0 * norm0;
      const double pointwise_violation = space.norm(xt) - std::exp(nu * (T - t)) * norm0;
      check.max_averaged_violation = std::max(check.max_averaged_violation, averaged_violation / (norm0 * norm0));
      check.max_pointwise_violation = std::max(check.max_pointwise_violation, pointwise_violation / norm0);
    }
  }
  check.averaged_holds = check.max_averaged_violation <= slack;
  check.pointwise_holds = check.max_pointwise_violation <= slack;
  return check;
}

}  // namespace hypoflow
