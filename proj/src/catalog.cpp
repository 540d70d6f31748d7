#include "hypoflow/catalog.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hypoflow/error.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "cli";

using nlohmann::json;

ModelInstance classical(const std::string& name, PotentialSpec potential, const ModelParams& p) {
  ClassicalModel model{std::move(potential), p.n_x.value_or(16), p.n_v.value_or(16)};
  if (model.n_x < 2 || model.n_v < 2) throw ConfigError(kModule, "truncation sizes must be at least 2");
  model.n_x = effective_n_x(model.potential, model.n_x);
  return ModelInstance{name, model, p.gamma.value_or(1.0)};
}

ModelInstance quantum(const std::string& name, LindbladModel lindblad, const ModelParams& p) {
  if (p.gamma) lindblad.gamma = *p.gamma;
  StationaryState stationary = stationary_state(lindblad);
  const double gamma = lindblad.gamma;
  return ModelInstance{name, QuantumModel{std::move(lindblad), std::move(stationary)}, gamma};
}

Index qubit_count(Index dim) {
  Index n = 0;
  while ((Index(1) << n) < dim) ++n;
  if ((Index(1) << n) != dim) throw ConfigError(kModule, "Pauli shorthand requires a qubit dimension");
  return n;
}

Matrix parse_pauli(const std::string& word, Index dim) {
  const Index n = qubit_count(dim);
  // Single-site form: letter followed by a 1-based qubit index, e.g. "Z1".
  if (word.size() >= 2 && std::isdigit(static_cast<unsigned char>(word[1]))) {
    const long site = std::stol(word.substr(1));
    if (site < 1 || site > n) throw ConfigError(kModule, "Pauli site out of range in '" + word + "'");
    std::string full(static_cast<std::size_t>(n), 'I');
    full[static_cast<std::size_t>(site - 1)] = word[0];
    return pauli_string(full);
  }
  if (static_cast<Index>(word.size()) != n) throw ConfigError(kModule, "Pauli word '" + word + "' has wrong length");
  try {
    return pauli_string(word);
  } catch (const Error& e) {
    throw ConfigError(kModule, e.reason());
  }
}

Scalar parse_scalar(const json& v) {
  if (v.is_number()) return Scalar(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Scalar(v[0].get<double>(), v[1].get<double>());
  throw ConfigError(kModule, "matrix entries must be numbers or [re, im] pairs");
}

Matrix parse_operator(const json& v, Index dim) {
  if (v.is_string()) return parse_pauli(v.get<std::string>(), dim);
  if (v.is_object()) {
    for (const auto& [key, value] : v.items())
      if (key != "pauli" && key != "coeff" && key != "matrix")
        throw ConfigError(kModule, "unknown operator key '" + key + "'");
    const Scalar coeff = v.contains("coeff") ? parse_scalar(v["coeff"]) : Scalar(1.0);
    if (v.contains("pauli")) return coeff * parse_operator(v["pauli"], dim);
    if (v.contains("matrix")) return coeff * parse_operator(v["matrix"], dim);
    throw ConfigError(kModule, "operator object needs 'pauli' or 'matrix'");
  }
  if (!v.is_array() || v.empty()) throw ConfigError(kModule, "operator must be a matrix, Pauli word or term list");
  // A matrix is an array of rows whose entries are scalars; anything else is a term list.
  auto scalar_like = [](const json& e) {
    return e.is_number() || (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number());
  };
  const bool rows = v[0].is_array() && !v[0].empty() && scalar_like(v[0][0]);
  if (rows && static_cast<Index>(v.size()) == dim) {
    Matrix m(dim, dim);
    for (Index i = 0; i < dim; ++i) {
      if (!v[i].is_array() || static_cast<Index>(v[i].size()) != dim) throw ConfigError(kModule, "matrix shape mismatch");
      for (Index j = 0; j < dim; ++j) m(i, j) = parse_scalar(v[i][j]);
    }
    return m;
  }
  Matrix sum = Matrix::Zero(dim, dim);
  for (const json& term : v) sum += parse_operator(term, dim);
  return sum;
}

}  // namespace

GeneratorDecomposition ModelInstance::decomposition() const { return decomposition(gamma); }

GeneratorDecomposition ModelInstance::decomposition(double friction) const {
  if (const auto* c = std::get_if<ClassicalModel>(&model)) return build_langevin(c->potential, c->n_x, c->n_v, friction);
  const auto& q = std::get<QuantumModel>(model);
  return build_lindblad_heisenberg(q.lindblad, q.stationary.sigma).with_gamma(friction);
}

const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"quadratic", "classical", "Langevin with U = m x^2 / 2 (parameter m, default 1)"},
      {"periodic-free", "classical", "Langevin on the torus with U = 0"},
      {"periodic-cos", "classical", "Langevin on the torus with U = a cos(x) (parameter amplitude, default 1)"},
      {"periodic", "classical", "Langevin on the torus with U from cos_coeffs / sin_coeffs"},
      {"thermal-qubit", "quantum", "H = Z/2, jumps sqrt(2/3) sigma_-, sqrt(1/3) sigma_+; sigma = diag(1/3, 2/3)"},
      {"two-qubit", "quantum", "H = XX, jumps XI and ZI; sigma = I/4"},
  };
  return entries;
}

ModelInstance load_model(const std::string& name, const ModelParams& params) {
  if (name == "quadratic") {
    const double m = params.m.value_or(1.0);
    if (!(m > 0.0)) throw ConfigError(kModule, "m must be positive");
    return classical(name, PotentialSpec::quadratic(m), params);
  }
  if (name == "periodic-free") return classical(name, PotentialSpec::periodic_free(), params);
  if (name == "periodic-cos") return classical(name, PotentialSpec::periodic_cosine(params.amplitude.value_or(1.0)), params);
  if (name == "periodic") {
    const std::size_t k_max = std::max(params.cos_coeffs.size(), params.sin_coeffs.size());
    std::vector<std::complex<double>> c(2 * k_max + 1, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double a = k <= params.cos_coeffs.size() ? params.cos_coeffs[k - 1] : 0.0;
      const double b = k <= params.sin_coeffs.size() ? params.sin_coeffs[k - 1] : 0.0;
      c[k_max + k] = std::complex<double>(0.5 * a, -0.5 * b);
      c[k_max - k] = std::conj(c[k_max + k]);
    }
    try {
      return classical(name, PotentialSpec::periodic(std::move(c)), params);
    } catch (const Error& e) {
      throw ConfigError(kModule, e.what());
    }
  }
  if (name == "thermal-qubit") {
    LindbladModel m{0.5 * pauli('Z'), {std::sqrt(2.0 / 3.0) * pauli('-'), std::sqrt(1.0 / 3.0) * pauli('+')}, 1.0};
    return quantum(name, std::move(m), params);
  }
  if (name == "two-qubit") {
    LindbladModel m{pauli_string("XX"), {pauli_string("XI"), pauli_string("ZI")}, 1.0};
    return quantum(name, std::move(m), params);
  }
  if (std::filesystem::is_regular_file(name)) {
    std::ifstream in(name);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(kModule, "malformed model file '" + name + "': " + e.what());
    }
    return quantum(std::filesystem::path(name).stem().string(), parse_lindblad_json(j), params);
  }
  throw ConfigError(kModule, "unknown model '" + name + "'");
}

LindbladModel parse_lindblad_json(const json& j) {
  if (!j.is_object()) throw ConfigError(kModule, "model file must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (key != "dim" && key != "H" && key != "jumps" && key != "gamma")
      throw ConfigError(kModule, "unknown model key '" + key + "'");
  if (!j.contains("dim") || !j["dim"].is_number_integer()) throw ConfigError(kModule, "model needs integer 'dim'");
  const Index dim = j["dim"].get<Index>();
  if (dim < 1) throw ConfigError(kModule, "dim must be positive");
  if (!j.contains("jumps") || !j["jumps"].is_array() || j["jumps"].empty())
    throw ConfigError(kModule, "model needs a non-empty 'jumps' list");

  LindbladModel model;
  model.hamiltonian = j.contains("H") ? parse_operator(j["H"], dim) : Matrix::Zero(dim, dim);
  for (const json& l : j["jumps"]) model.jumps.push_back(parse_operator(l, dim));
  model.gamma = j.value("gamma", 1.0);
  try {
    model.validate();
  } catch (const Error& e) {
    throw ConfigError(kModule, e.what());
  }
  return model;
}

nlohmann::ordered_json describe_model(const ModelInstance& model) {
  const GeneratorDecomposition d = model.decomposition();
  nlohmann::ordered_json j;
  j["name"] = model.name;
  j["kind"] = model.is_quantum() ? "quantum" : "classical";
  j["dim"] = d.dim();
  if (const auto* c = std::get_if<ClassicalModel>(&model.model)) {
    j["potential"] = c->potential.describe();
    j["n_x"] = c->n_x;
    j["n_v"] = c->n_v;
  } else {
    j["hilbert_dim"] = std::get<QuantumModel>(model.model).lindblad.dim();
  }
  const Index ker_ls = kernel_basis(d.l_s).cols();
  const Index ker_l = kernel_basis(d.generator()).cols();
  // ker(L_a) and ker(L_s) intersect in the kernel of L_a* L_a + L_s* L_s.
  const Matrix both = kernel_basis(adjoint(d.l_a) * d.l_a + adjoint(d.l_s) * d.l_s);
  j["ker_ls_dim"] = ker_ls;
  j["ker_l_dim"] = ker_l;
  j["classification"] = ker_l < ker_ls ? "hypocoercive" : "coercive";
  const double anti = symmetry_check(d.l_a, 1e-10).antisymmetric_residual;
  const double sym = symmetry_check(d.l_s, 1e-10).symmetric_residual;
  const double php = weighted_norm(d.pi_s * d.l_a * d.pi_s);
  nlohmann::ordered_json assumptions;
  assumptions["l_a_antisymmetric"] = anti < 1e-10;
  assumptions["l_s_symmetric"] = sym < 1e-10;
  assumptions["php_vanishes"] = php < 1e-10;
  assumptions["kernel_characterization"] = same_subspace(d.space(), both, kernel_basis(d.generator()), 1e-8);
  assumptions["strict_equilibrium_subspace"] = ker_l < ker_ls;
  j["assumptions"] = assumptions;
  return j;
}

}  // namespace hypoflow
