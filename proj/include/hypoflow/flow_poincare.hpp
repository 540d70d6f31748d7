#pragma once

// Flow and space-time Poincare functionals evaluated along exact semigroup
// trajectories x_t = exp(t L_gamma) x0, with time averages over [0, T] taken
// by Gauss-Legendre quadrature.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypoflow/decomposition.hpp"
#include "hypoflow/hilbert.hpp"

namespace hypoflow {

struct LabeledState {
  std::string label;
  Vector x0;
};

struct FlowSample {
  double gamma = 0.0;
  double horizon_T = 0.0;
  double lhs = 0.0;          // (1/T) int ||x_t||^2
  double dissipation = 0.0;  // (1/T) int <x_t, -L_s x_t>
  double ratio = 0.0;        // lhs / dissipation; NaN when degenerate
  std::string initial_label;
  bool degenerate = false;   // x0 vanished after projection off ker(L_gamma)
};

struct QuadratureRule {
  std::vector<double> nodes;    // in (0, T)
  std::vector<double> weights;  // sum to 1 (time average)
};

/// n-point Gauss-Legendre rule for averages over [0, T].
QuadratureRule gauss_legendre(int n, double T);

/// Default initial data: gram-orthonormal basis of H_O projected off
/// ker(L_gamma), plus `randoms` seeded random vectors (also projected).
std::vector<LabeledState> default_initial_states(const GeneratorDecomposition& decomp, double gamma,
                                                 int randoms = 8, std::uint64_t seed = 12345);

/// 2 / sqrt(lambda_O).
double default_horizon(const GeneratorDecomposition& decomp);

std::vector<FlowSample> flow_ratio(const GeneratorDecomposition& decomp, double gamma, double T,
                                   const std::vector<LabeledState>& x0_set, int quad_n = 64);

/// Largest ratio over non-degenerate samples (empirical 1 / alpha_T).
double worst_ratio(const std::vector<FlowSample>& samples);

struct SpaceTimeTerms {
  double lhs_norm = 0.0;  // avg ||f - mean||^2
  double term1 = 0.0;     // avg ||(I - Pi_s) f||^2
  double term2 = 0.0;     // avg ||(I - L_s)^{-1/2} (d/dt - L_a) f||^2
  double term2_identity = 0.0;  // gamma^2 avg ||(I - L_s)^{-1/2} L_s f||^2
};

SpaceTimeTerms space_time_terms(const GeneratorDecomposition& decomp, double gamma, double T, const Vector& x0,
                                int quad_n = 64);

struct RatioFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double gamma_max = 0.0;      // sqrt(c1 / c2)
  double predicted_max = 0.0;  // nu(gamma_max) = 1 / (2 sqrt(c1 c2))
  double residual = 0.0;       // weighted RMS relative misfit
  double residual_c1_only = 0.0;
};

/// Nonnegative weighted least squares of ratios against c1 + gamma^2 c2 with
/// weights 1 / ratio^2. Throws "flow-Poincare model misfit" if a constant is 0.
RatioFit fit_ratio_model(const std::vector<double>& gammas, const std::vector<double>& ratios);

/// gamma / (c1 + gamma^2 c2).
double predicted_rate(const RatioFit& fit, double gamma);

struct FlowFit {
  RatioFit fit;
  std::vector<double> gamma_grid;
  std::vector<double> worst_ratios;
  std::vector<double> predicted_rates;
  std::vector<FlowSample> samples;  // grouped by gamma, grid order
  double horizon_T = 0.0;
  double space_time_a = 0.0;  // lhs <= a^2 (sqrt(term1) + sqrt(term2))^2 over all samples
};

struct FlowOptions {
  std::optional<double> horizon;        // default_horizon
  std::vector<LabeledState> x0_set;     // empty: default_initial_states per gamma
  int quad_n = 64;
  int randoms = 8;
  std::uint64_t seed = 12345;
};

FlowFit fit_constants(const GeneratorDecomposition& decomp, const std::vector<double>& gamma_grid,
                      const FlowOptions& options = {});

struct DecayCheck {
  bool averaged_holds = true;   // windowed average <= e^{-2 nu t} ||x0||^2
  bool pointwise_holds = true;  // ||P_t x0|| <= e^{nu T} e^{-nu t} ||x0||
  double max_averaged_violation = 0.0;
  double max_pointwise_violation = 0.0;
  bool passed() const { return averaged_holds && pointwise_holds; }
};

/// Checks both decay inequalities on 200 times in [0, 10 / nu] (10 T when nu = 0).
DecayCheck verify_decay(const GeneratorDecomposition& decomp, double gamma, double nu, double T,
                        const std::vector<LabeledState>& x0_set, double slack = 1e-9);

}  // namespace hypoflow
