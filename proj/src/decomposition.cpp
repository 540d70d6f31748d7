#include "hypoflow/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypoflow/error.hpp"

namespace hypoflow {

LinOp GeneratorDecomposition::generator(double friction) const {
  return LinOp(space(), l_a.matrix + friction * l_s.matrix);
}

GeneratorDecomposition GeneratorDecomposition::with_gamma(double friction) const {
  if (!(friction > 0.0) || !std::isfinite(friction)) throw Error("decomposition", "gamma must be positive");
  GeneratorDecomposition out = *this;
  out.gamma = friction;
  return out;
}

GeneratorDecomposition make_decomposition(LinOp l_a, LinOp l_s, double gamma,
                                          std::vector<BasisLabel> basis_meta, double symmetry_tol) {
  const char* module = "decomposition";
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(module, "gamma must be positive");
  if (!l_a.space.same_as(l_s.space)) throw Error(module, "l_a and l_s act on different spaces");
  if (!basis_meta.empty() && static_cast<Index>(basis_meta.size()) != l_a.dim())
    throw Error(module, "basis metadata size mismatch");

  const SymmetryReport anti = symmetry_check(l_a, symmetry_tol);
  if (anti.antisymmetric_residual >= symmetry_tol)
    throw Error(module, "l_a is not antisymmetric (residual " + std::to_string(anti.antisymmetric_residual) + ")");
  const SymmetryReport sym = symmetry_check(l_s, symmetry_tol);
  if (sym.symmetric_residual >= symmetry_tol)
    throw Error(module, "l_s is not symmetric (residual " + std::to_string(sym.symmetric_residual) + ")");

  LinOp pi_s = kernel_projector(l_s);
  const double scale = std::max(1.0, weighted_norm(l_s));
  if (weighted_norm(l_s * pi_s) > 1e-10 * scale || weighted_norm(pi_s * l_s) > 1e-10 * scale)
    throw Error(module, "l_s does not annihilate its kernel projector");

  return GeneratorDecomposition{std::move(l_a), std::move(l_s), gamma, std::move(pi_s), std::move(basis_meta), 0.0};
}

}  // namespace hypoflow
