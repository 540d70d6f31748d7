#pragma once

// Lifting structure of L_gamma = L_a + gamma L_s over the collapsed space
// H_O = ker(L_s): the overdamped generator, lift residuals, rate curves over
// gamma and the rate bounds that follow from them.

#include <optional>
#include <vector>

#include "hypoflow/decomposition.hpp"
#include "hypoflow/hilbert.hpp"

namespace hypoflow {

/// L_O = -(L_a P)* S (L_a P) on H_O, in coordinates of a gram-orthonormal
/// basis of H_O (so `generator` lives on a Euclidean space).
struct OverdampedLimit {
  LinOp generator;
  Matrix basis;                 // columns span H_O in full coordinates
  double range_residual = 0.0;  // ||(I - L_s L_s^+) L_a Pi_s||
  std::optional<double> gap;    // lambda_O; empty when L_O = 0
};

/// Default S: pseudo_inverse(-L_s), zero on ker(L_s).
LinOp default_s_operator(const GeneratorDecomposition& decomp);

OverdampedLimit overdamped_limit(const GeneratorDecomposition& decomp);
OverdampedLimit overdamped_limit(const GeneratorDecomposition& decomp, const LinOp& s_op);

struct LiftReport {
  double php_residual = 0.0;
  double coercivity_lambda_s = 0.0;
  bool kernel_equal = false;      // ker(L_O) = ker(L_gamma)
  bool strict_subspace = false;   // ker(L_gamma) is a strict subspace of H_O
  double second_order_residual = 0.0;
  double first_order_residual = 0.0;
  double s_tilde_m = 0.0;
  Index collapsed_dim = 0;
  Index kernel_dim = 0;
  std::optional<double> overdamped_gap;

  /// Remark 4.1 branch: ker(L_gamma) = H_O, the semigroup is coercive.
  bool coercive() const { return kernel_equal && !strict_subspace; }
};

/// Residuals are spectral norms of the form mismatches over a gram-orthonormal
/// basis of H_O. Throws "S not positive" if S has an eigenvalue below -1e-9 ||S||
/// on ker(L_s)^perp.
LiftReport check_lift_conditions(const GeneratorDecomposition& decomp, const std::optional<LinOp>& s_op = {});

struct RateReport {
  std::vector<double> gamma_grid;
  std::vector<double> spectral_gaps;
  std::vector<double> singular_gaps;
  std::vector<double> prefactors;           // grid supremum, >= 1
  std::vector<double> prefactors_margined;  // prefactors * 1.05
  std::vector<bool> monotone;               // sampled decay is non-increasing
  double argmax_gamma = 0.0;
  double max_gap = 0.0;
  double refined_gamma = 0.0;  // golden-section refinement around argmax
  double refined_gap = 0.0;
  std::optional<double> overdamped_gap;
  std::optional<double> s_tilde_m;
  std::optional<double> ceiling;  // sqrt(lambda_O / s_tilde_m); bound is (1 + log C) * ceiling
};

struct RateScanOptions {
  std::vector<double> gamma_grid;  // empty: default_gamma_grid
  std::vector<double> t_grid;      // empty: per-gamma default_t_grid
  int t_points = 64;               // density of the per-gamma default grid
  bool prefactors = true;
  bool refine = true;
};

/// 48 log-spaced points in [sqrt(lambda)/16, 16 sqrt(lambda)].
std::vector<double> default_gamma_grid(double lambda_o, int points = 48);
/// 64 log-spaced points in [1e-3/nu, 20/nu].
std::vector<double> default_t_grid(double nu, int points = 64);
std::vector<double> log_grid(double lo, double hi, int points);

RateReport rate_scan(const GeneratorDecomposition& decomp, const RateScanOptions& options = {});

/// (1 + log C) sqrt(lambda_O / s_tilde_m). Throws "upper bound degenerate".
double upper_bound(const GeneratorDecomposition& decomp, const std::optional<LinOp>& s_op, double prefactor_c);
double upper_bound(const LiftReport& lift, double prefactor_c);

struct RateBoundCheck {
  bool lemma_holds = true;                // nu0 <= (1 + log C) s(L) at every gamma
  std::optional<bool> theorem_holds;      // empty when the bound is degenerate
  double worst_lemma_ratio = 0.0;         // max nu0 / ((1 + log C) s)
  double worst_theorem_ratio = 0.0;
};

RateBoundCheck check_rate_bounds(const RateReport& report, const LiftReport& lift);

/// m gamma / (c (sqrt(m) + gamma)^2).
double langevin_rate(double m, double gamma, double c = 1.0);
/// gamma lambda_s / (c1^2 + gamma^2 lambda_s c2^2).
double quantum_rate(double lambda_s, double c1, double c2, double gamma);

}  // namespace hypoflow
