#pragma once

#include <vector>

#include "hypoflow/hilbert.hpp"

namespace hypoflow {

/// Degree bookkeeping for one Galerkin basis function phi_i(x) * He_k(v).
struct BasisLabel {
  int x_index = 0;
  int v_degree = 0;
};

/// L = l_a + gamma * l_s with l_a antisymmetric and l_s symmetric in the
/// weighted geometry, plus the projector pi_s onto ker(l_s).
struct GeneratorDecomposition {
  LinOp l_a;
  LinOp l_s;
  double gamma = 1.0;
  LinOp pi_s;
  std::vector<BasisLabel> basis_meta;  // empty for operator (quantum) spaces
  /// Norm of the symmetric part removed from the assembled l_a.
  double antisymmetrization_defect = 0.0;

  const WeightedSpace& space() const { return l_a.space; }
  Index dim() const { return l_a.dim(); }
  LinOp generator() const { return generator(gamma); }
  LinOp generator(double friction) const;
  GeneratorDecomposition with_gamma(double friction) const;
};

/// Validates the structural invariants (antisymmetry, symmetry, l_s pi_s = 0)
/// and computes pi_s. Throws hypoflow::Error on violation.
GeneratorDecomposition make_decomposition(LinOp l_a, LinOp l_s, double gamma,
                                          std::vector<BasisLabel> basis_meta = {},
                                          double symmetry_tol = 1e-10);

}  // namespace hypoflow
