#include "doctest.h"

#include <cmath>

#include "hypoflow/classical.hpp"
#include "hypoflow/error.hpp"
#include "hypoflow/flow_poincare.hpp"

using namespace hypoflow;

TEST_CASE("Gauss-Legendre averages are exact for polynomials") {
  const double T = 3.0;
  const QuadratureRule rule = gauss_legendre(8, T);
  double sum_w = 0.0, avg = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum_w += rule.weights[i];
    avg += rule.weights[i] * std::pow(rule.nodes[i], 15);
  }
  CHECK(sum_w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(avg == doctest::Approx(std::pow(T, 15) / 16.0).epsilon(1e-12));
}

TEST_CASE("synthetic ratios recover the injected constants") {
  std::vector<double> gammas, ratios;
  for (double g = 0.1; g < 10.0; g *= 1.5) {
    gammas.push_back(g);
    ratios.push_back(2.0 + 3.0 * g * g);
  }
  const RatioFit fit = fit_ratio_model(gammas, ratios);
  CHECK(std::abs(fit.c1 - 2.0) < 1e-8);
  CHECK(std::abs(fit.c2 - 3.0) < 1e-8);
  CHECK(fit.gamma_max == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(fit.predicted_max == doctest::Approx(1.0 / (2.0 * std::sqrt(6.0))));
  CHECK(predicted_rate(fit, fit.gamma_max) == doctest::Approx(fit.predicted_max));
}

TEST_CASE("fit rejects degenerate data") {
  CHECK_THROWS_AS(fit_ratio_model({1.0, 2.0, 3.0, 4.0}, {5.0, 5.0, 5.0, 5.0}), Error);
  CHECK_THROWS_AS(fit_ratio_model({1.0, 2.0}, {3.0, 6.0}), Error);
}

TEST_CASE("flow ratios on the quadratic model") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(1.0), 6, 6);
  CHECK(default_horizon(d) == doctest::Approx(2.0));
  const std::vector<LabeledState> x0 = default_initial_states(d, 1.0, 4, 99);
  CHECK(x0.size() >= 4);
  const std::vector<FlowSample> samples = flow_ratio(d, 1.0, 2.0, x0, 32);
  for (const FlowSample& s : samples) {
    if (s.degenerate) continue;
    CHECK(s.ratio > 0.0);
    CHECK(s.lhs > 0.0);
    CHECK(s.ratio == doctest::Approx(s.lhs / s.dissipation));
  }
  CHECK(worst_ratio(samples) >= 1.0);
}

TEST_CASE("space-time terms bound the averaged norm") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(1.0), 6, 6);
  const std::vector<LabeledState> x0 = default_initial_states(d, 1.0, 2, 5);
  for (const LabeledState& s : x0) {
    const SpaceTimeTerms t = space_time_terms(d, 1.0, 2.0, s.x0, 32);
    CHECK(t.lhs_norm >= 0.0);
    CHECK(t.term1 >= 0.0);
    CHECK(t.term2 >= 0.0);
    CHECK(t.term2_identity >= 0.0);
  }
}

TEST_CASE("fitted constants give a decay rate that verifies") {
  const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(1.0), 6, 6);
  FlowOptions opt;
  opt.randoms = 4;
  const FlowFit fit = fit_constants(d, {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, opt);
  CHECK(fit.fit.c1 > 0.0);
  CHECK(fit.fit.c2 > 0.0);
  const std::vector<LabeledState> x0 = default_initial_states(d, fit.fit.gamma_max, 4, 12345);
  CHECK(verify_decay(d, fit.fit.gamma_max, fit.fit.predicted_max, fit.horizon_T, x0).passed());
  // a rate well above the spectral gap must fail the pointwise bound
  CHECK_FALSE(verify_decay(d, fit.fit.gamma_max, 5.0, fit.horizon_T, x0).passed());
}
