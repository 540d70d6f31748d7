#pragma once

// Named models shipped with the toolkit plus JSON model files.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hypoflow/classical.hpp"
#include "hypoflow/decomposition.hpp"
#include "hypoflow/quantum.hpp"

namespace hypoflow {

struct ClassicalModel {
  PotentialSpec potential;
  int n_x = 16;
  int n_v = 16;
};

struct QuantumModel {
  LindbladModel lindblad;
  StationaryState stationary;
};

struct ModelInstance {
  std::string name;
  std::variant<ClassicalModel, QuantumModel> model;
  double gamma = 1.0;

  bool is_quantum() const { return std::holds_alternative<QuantumModel>(model); }
  GeneratorDecomposition decomposition() const;
  GeneratorDecomposition decomposition(double friction) const;
};

/// Parameters a catalog model may take; unset fields use the model default.
struct ModelParams {
  std::optional<double> m;
  std::optional<double> amplitude;
  std::vector<double> cos_coeffs;  // U = sum_k a_k cos(kx) + b_k sin(kx), k >= 1
  std::vector<double> sin_coeffs;
  std::optional<double> gamma;
  std::optional<int> n_x;
  std::optional<int> n_v;
};

struct CatalogEntry {
  std::string name;
  std::string kind;  // classical | quantum
  std::string description;
};

const std::vector<CatalogEntry>& catalog_entries();

/// Builds a catalog model or, if `name` is a path to a JSON file, a quantum
/// model from that file. Throws ConfigError for unknown names or bad files.
ModelInstance load_model(const std::string& name, const ModelParams& params = {});

/// {dim, H, jumps, gamma}; matrices are rows of [re, im] pairs (plain numbers
/// allowed). Qubit operators may be Pauli words ("XX", "+I") or single-site
/// terms like "Z1"; objects {"pauli": word, "coeff": c} and lists of them sum.
LindbladModel parse_lindblad_json(const nlohmann::json& j);

/// Per-model summary: dimensions and which structural assumptions hold.
nlohmann::ordered_json describe_model(const ModelInstance& model);

}  // namespace hypoflow
