#include "hypoflow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hypoflow/catalog.hpp"
#include "hypoflow/config.hpp"
#include "hypoflow/error.hpp"
#include "hypoflow/flow_poincare.hpp"
#include "hypoflow/lifting.hpp"
#include "hypoflow/sde.hpp"

namespace hypoflow {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

enum class Type { number, integer, string, boolean, numbers };

struct KeySpec {
  std::string key;
  Type type;
  std::string help;
};

const std::vector<KeySpec> kModelKeys = {
    {"model", Type::string, "catalog name or path to a JSON model file"},
    {"m", Type::number, "curvature of the quadratic potential"},
    {"amplitude", Type::number, "amplitude a of U = a cos(x)"},
    {"cos_coeffs", Type::numbers, "cosine coefficients a_1, a_2, ... of a periodic U"},
    {"sin_coeffs", Type::numbers, "sine coefficients b_1, b_2, ... of a periodic U"},
    {"gamma", Type::number, "friction"},
    {"nx", Type::integer, "x-basis truncation"},
    {"nv", Type::integer, "v-basis (Hermite) truncation"},
};

const std::vector<KeySpec> kOutputKeys = {
    {"output", Type::string, "write the report to this path instead of stdout"},
    {"format", Type::string, "csv or json"},
    {"pretty", Type::boolean, "human-readable output"},
};

const std::vector<KeySpec> kGridKeys = {
    {"gamma_min", Type::number, "smallest friction of the grid"},
    {"gamma_max", Type::number, "largest friction of the grid"},
    {"gamma_points", Type::integer, "number of log-spaced grid points"},
};

struct Command {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

std::vector<KeySpec> join(std::initializer_list<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"spectrum", "spectral gap, singular gap and relaxation time of L_gamma",
       join({kModelKeys, kOutputKeys,
             {{"tol", Type::number, "relative kernel tolerance"},
              {"eigen_count", Type::integer, "number of slowest eigenvalues in the JSON report"}}})},
      {"rate-scan", "spectral and singular gaps and prefactors over a friction grid",
       join({kModelKeys, kOutputKeys, kGridKeys,
             {{"t_points", Type::integer, "time points per prefactor estimate"},
              {"no_prefactors", Type::boolean, "skip the prefactor estimates"}}})},
      {"lift-check", "lifting residuals, kernel comparison and s_tilde_m", join({kModelKeys, kOutputKeys})},
      {"overdamped-limit", "effective generator L_O on ker(L_s)", join({kModelKeys, kOutputKeys})},
      {"flow-poincare", "flow Poincare ratios, fitted (C1, C2) and decay verification",
       join({kModelKeys, kOutputKeys, kGridKeys,
             {{"T", Type::number, "averaging horizon"},
              {"quad_n", Type::integer, "Gauss-Legendre nodes"},
              {"randoms", Type::integer, "random initial states per gamma"},
              {"seed", Type::integer, "seed for random initial states"}}})},
      {"simulate", "Monte Carlo for the Langevin or overdamped SDE",
       join({kModelKeys, kOutputKeys,
             {{"dt", Type::number, "time step"},
              {"steps", Type::integer, "number of steps"},
              {"paths", Type::integer, "number of paths"},
              {"seed", Type::integer, "RNG seed"},
              {"integrator", Type::string, "baoab or euler_maruyama"},
              {"initial", Type::string, "point or stationary"},
              {"x0", Type::number, "initial position"},
              {"v0", Type::number, "initial velocity"},
              {"record_stride", Type::integer, "steps between recorded times"},
              {"overdamped", Type::boolean, "simulate the overdamped SDE"},
              {"fit_observable", Type::string, "observable for the decay fit"},
              {"fit_start", Type::number, "start of the fit window"},
              {"fit_end", Type::number, "end of the fit window"},
              {"equilibrium", Type::number, "equilibrium value of the fitted observable"}}})},
      {"formulas", "closed-form rates nu(gamma)",
       join({kOutputKeys,
             {{"kind", Type::string, "langevin or quantum"},
              {"m", Type::number, "curvature"},
              {"gamma", Type::number, "friction"},
              {"c", Type::number, "constant c of the Langevin formula"},
              {"lambda_s", Type::number, "coercivity constant of L_s"},
              {"c1", Type::number, "constant C1"},
              {"c2", Type::number, "constant C2"}}})},
      {"models", "list the model catalog", join({kOutputKeys})},
  };
  return list;
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string underscored(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v))
    throw ConfigError("cli: invalid number for '" + key + "': '" + text + "'");
  return v;
}

json convert(const KeySpec& spec, const std::string& text) {
  switch (spec.type) {
    case Type::number:
      return parse_number(spec.key, text);
    case Type::integer: {
      const double v = parse_number(spec.key, text);
      if (v != std::floor(v)) throw ConfigError("cli: '" + spec.key + "' must be an integer");
      return static_cast<long long>(v);
    }
    case Type::string:
      return text;
    case Type::boolean:
      return true;
    case Type::numbers: {
      json list = json::array();
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) list.push_back(parse_number(spec.key, item));
      return list;
    }
  }
  return nullptr;
}

void check_type(const KeySpec& spec, const json& v) {
  bool ok = false;
  switch (spec.type) {
    case Type::number: ok = v.is_number(); break;
    case Type::integer: ok = v.is_number_integer(); break;
    case Type::string: ok = v.is_string(); break;
    case Type::boolean: ok = v.is_boolean(); break;
    case Type::numbers:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
      break;
  }
  if (!ok) throw ConfigError("cli: config key '" + spec.key + "' has the wrong type");
}

class Params {
 public:
  explicit Params(json values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.contains(key); }
  double number(const std::string& key, double fallback) const {
    return has(key) ? values_[key].get<double>() : fallback;
  }
  std::optional<double> maybe_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return values_[key].get<double>();
  }
  long long integer(const std::string& key, long long fallback) const {
    return has(key) ? values_[key].get<long long>() : fallback;
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? values_[key].get<std::string>() : fallback;
  }
  bool flag(const std::string& key) const { return has(key) && values_[key].get<bool>(); }
  std::vector<double> numbers(const std::string& key) const {
    return has(key) ? values_[key].get<std::vector<double>>() : std::vector<double>{};
  }
  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError("cli: '" + key + "' must be positive");
    return v;
  }
  long long positive_integer(const std::string& key, long long fallback) const {
    const long long v = integer(key, fallback);
    if (v < 1) throw ConfigError("cli: '" + key + "' must be positive");
    return v;
  }

 private:
  json values_;
};

ModelInstance load_instance(const Params& p, int default_truncation) {
  ModelParams mp;
  mp.m = p.maybe_number("m");
  mp.amplitude = p.maybe_number("amplitude");
  mp.cos_coeffs = p.numbers("cos_coeffs");
  mp.sin_coeffs = p.numbers("sin_coeffs");
  if (p.has("gamma")) mp.gamma = p.positive("gamma", 1.0);
  mp.n_x = static_cast<int>(p.positive_integer("nx", default_truncation));
  mp.n_v = static_cast<int>(p.positive_integer("nv", default_truncation));
  return load_model(p.string("model", "quadratic"), mp);
}

ojson complex_list(const std::vector<Scalar>& values) {
  ojson out = ojson::array();
  for (const Scalar& z : values) out.push_back({z.real(), z.imag()});
  return out;
}

std::vector<double> gamma_grid(const Params& p, double centre, int default_points, double below, double above) {
  const double r = std::sqrt(centre);
  const double lo = p.positive("gamma_min", r / below);
  const double hi = p.positive("gamma_max", r * above);
  if (!(hi >= lo)) throw ConfigError("cli: gamma_max must be >= gamma_min");
  return log_grid(lo, hi, static_cast<int>(p.positive_integer("gamma_points", default_points)));
}

struct Report {
  ojson json;
  std::string csv;  // empty when the command has no CSV form
};

Report cmd_spectrum(const Params& p) {
  const ModelInstance inst = load_instance(p, 16);
  const double tol = p.positive("tol", kKernelTol);
  const GeneratorDecomposition d = inst.decomposition();
  const LinOp gen = d.generator();
  const SpectralReport spec = spectral_gap(gen, tol);
  RelaxationOptions ro;
  ro.tol = tol;
  const RelaxationReport rel = relaxation_time(gen, ro);

  Report r;
  r.json["command"] = "spectrum";
  r.json["model"] = inst.name;
  r.json["gamma"] = d.gamma;
  r.json["dim"] = d.dim();
  r.json["gap"] = spec.gap;
  r.json["kernel_dim"] = spec.kernel_dim;
  r.json["singular_gap"] = rel.singular_gap;
  r.json["relaxation_time"] = rel.t_rel;
  r.json["relaxation_lower_bound"] = rel.lower_bound;
  r.json["antisymmetric_residual"] = symmetry_check(d.l_a, 1e-10).antisymmetric_residual;
  r.json["symmetric_residual"] = symmetry_check(d.l_s, 1e-10).symmetric_residual;
  r.json["antisymmetrization_defect"] = d.antisymmetrization_defect;
  const std::size_t count =
      std::min<std::size_t>(spec.eigenvalues.size(), static_cast<std::size_t>(p.positive_integer("eigen_count", 16)));
  std::vector<Scalar> slowest(spec.eigenvalues.rbegin(), spec.eigenvalues.rbegin() + static_cast<long>(count));
  r.json["eigenvalues"] = complex_list(slowest);

  std::ostringstream csv;
  csv << std::setprecision(17) << "index,re,im\n";
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i)
    csv << i << ',' << spec.eigenvalues[i].real() << ',' << spec.eigenvalues[i].imag() << '\n';
  r.csv = csv.str();
  return r;
}

Report cmd_rate_scan(const Params& p) {
  const ModelInstance inst = load_instance(p, 8);
  const GeneratorDecomposition d = inst.decomposition();
  const LiftReport lift = check_lift_conditions(d);

  RateScanOptions options;
  options.prefactors = !p.flag("no_prefactors");
  const double centre = lift.overdamped_gap ? *lift.overdamped_gap : lift.coercivity_lambda_s;
  options.gamma_grid = gamma_grid(p, centre, 48, 16.0, 16.0);
  options.t_points = static_cast<int>(p.positive_integer("t_points", 64));
  const RateReport rr = rate_scan(d, options);

  Report r;
  r.json["command"] = "rate-scan";
  r.json["model"] = inst.name;
  r.json["dim"] = d.dim();
  r.json["argmax_gamma"] = rr.argmax_gamma;
  r.json["max_gap"] = rr.max_gap;
  r.json["refined_gamma"] = rr.refined_gamma;
  r.json["refined_gap"] = rr.refined_gap;
  r.json["overdamped_gap"] = rr.overdamped_gap ? ojson(*rr.overdamped_gap) : ojson(nullptr);
  r.json["s_tilde_m"] = rr.s_tilde_m ? ojson(*rr.s_tilde_m) : ojson(nullptr);
  r.json["ceiling"] = rr.ceiling ? ojson(*rr.ceiling) : ojson(nullptr);
  if (options.prefactors) {
    const RateBoundCheck check = check_rate_bounds(rr, lift);
    r.json["lemma_holds"] = check.lemma_holds;
    r.json["theorem_holds"] = check.theorem_holds ? ojson(*check.theorem_holds) : ojson(nullptr);
  }
  ojson rows = ojson::array();
  std::ostringstream csv;
  csv << std::setprecision(17) << "gamma,spectral_gap,singular_gap,prefactor,prefactor_margined,monotone\n";
  for (std::size_t i = 0; i < rr.gamma_grid.size(); ++i) {
    ojson row;
    row["gamma"] = rr.gamma_grid[i];
    row["spectral_gap"] = rr.spectral_gaps[i];
    row["singular_gap"] = rr.singular_gaps[i];
    if (options.prefactors) {
      row["prefactor"] = rr.prefactors[i];
      row["prefactor_margined"] = rr.prefactors_margined[i];
      row["monotone"] = static_cast<bool>(rr.monotone[i]);
    }
    rows.push_back(row);
    csv << rr.gamma_grid[i] << ',' << rr.spectral_gaps[i] << ',' << rr.singular_gaps[i] << ',';
    if (options.prefactors)
      csv << rr.prefactors[i] << ',' << rr.prefactors_margined[i] << ',' << (rr.monotone[i] ? "true" : "false");
    else
      csv << ",,";
    csv << '\n';
  }
  r.json["rows"] = rows;
  r.csv = csv.str();
  return r;
}

Report cmd_lift_check(const Params& p) {
  const ModelInstance inst = load_instance(p, 16);
  const GeneratorDecomposition d = inst.decomposition();
  const LiftReport lift = check_lift_conditions(d);
  Report r;
  r.json["command"] = "lift-check";
  r.json["model"] = inst.name;
  r.json["dim"] = d.dim();
  r.json["php_residual"] = lift.php_residual;
  r.json["coercivity_lambda_s"] = lift.coercivity_lambda_s;
  r.json["kernel_equal"] = lift.kernel_equal;
  r.json["strict_subspace"] = lift.strict_subspace;
  r.json["coercive"] = lift.coercive();
  r.json["second_order_residual"] = lift.second_order_residual;
  r.json["first_order_residual"] = lift.first_order_residual;
  r.json["s_tilde_m"] = lift.s_tilde_m;
  r.json["overdamped_gap"] = lift.overdamped_gap ? ojson(*lift.overdamped_gap) : ojson(nullptr);
  ojson dims;
  dims["ker_ls"] = lift.collapsed_dim;
  dims["ker_l"] = lift.kernel_dim;
  r.json["kernel_dims"] = dims;
  if (const auto* q = std::get_if<QuantumModel>(&inst.model)) {
    const CommutantKernels ck = commutant_kernel(q->lindblad, q->stationary.sigma);
    ojson commutant;
    commutant["ker_ls"] = ck.ker_ls_basis.cols();
    commutant["ker_l"] = ck.ker_l_basis.cols();
    r.json["commutant_dims"] = commutant;
    r.json["dissipator_kms_residual"] =
        check_detailed_balance(q->lindblad, q->stationary.sigma, 1e-8, BalanceTarget::dissipative_part).residual;
  }
  return r;
}

Report cmd_overdamped(const Params& p) {
  const ModelInstance inst = load_instance(p, 16);
  const GeneratorDecomposition d = inst.decomposition();
  const OverdampedLimit limit = overdamped_limit(d);
  Report r;
  r.json["command"] = "overdamped-limit";
  r.json["model"] = inst.name;
  r.json["collapsed_dim"] = limit.basis.cols();
  r.json["gap"] = limit.gap ? ojson(*limit.gap) : ojson(nullptr);
  r.json["range_residual"] = limit.range_residual;
  r.json["eigenvalues"] = complex_list(sorted_eigenvalues(limit.generator));
  if (const auto* c = std::get_if<ClassicalModel>(&inst.model)) {
    const LinOp direct = build_overdamped(c->potential, c->n_x);
    const double direct_gap = spectral_gap(direct).gap;
    r.json["direct_gap"] = direct_gap;
    if (limit.gap) r.json["gap_difference"] = std::abs(*limit.gap - direct_gap);
  }
  return r;
}

Report cmd_flow(const Params& p) {
  const ModelInstance inst = load_instance(p, 8);
  const GeneratorDecomposition d = inst.decomposition();
  const OverdampedLimit limit = overdamped_limit(d);
  if (!limit.gap) throw Error("flow-poincare", "model has no overdamped gap (coercive branch)");
  const std::vector<double> grid = gamma_grid(p, *limit.gap, 12, 8.0, 8.0);
  FlowOptions options;
  if (p.has("T")) options.horizon = p.positive("T", 1.0);
  options.quad_n = static_cast<int>(p.positive_integer("quad_n", 64));
  options.randoms = static_cast<int>(p.integer("randoms", 8));
  options.seed = static_cast<std::uint64_t>(p.integer("seed", 12345));
  const FlowFit fit = fit_constants(d, grid, options);
  const std::vector<LabeledState> x0 = default_initial_states(d, fit.fit.gamma_max, options.randoms, options.seed);
  const DecayCheck decay = verify_decay(d, fit.fit.gamma_max, fit.fit.predicted_max, fit.horizon_T, x0);
  const double measured = spectral_gap(d.generator(fit.fit.gamma_max)).gap;

  Report r;
  r.json["command"] = "flow-poincare";
  r.json["model"] = inst.name;
  r.json["T"] = fit.horizon_T;
  r.json["c1"] = fit.fit.c1;
  r.json["c2"] = fit.fit.c2;
  r.json["gamma_max"] = fit.fit.gamma_max;
  r.json["predicted_rate_at_gamma_max"] = fit.fit.predicted_max;
  r.json["spectral_gap_at_gamma_max"] = measured;
  r.json["fit_residual"] = fit.fit.residual;
  r.json["fit_residual_c1_only"] = fit.fit.residual_c1_only;
  r.json["space_time_constant"] = fit.space_time_a;
  r.json["averaged_decay_holds"] = decay.averaged_holds;
  r.json["pointwise_decay_holds"] = decay.pointwise_holds;
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({{"gamma", grid[i]}, {"worst_ratio", fit.worst_ratios[i]}, {"predicted_rate", fit.predicted_rates[i]}});
  r.json["rows"] = rows;

  std::ostringstream csv;
  csv << std::setprecision(17) << "gamma,initial,lhs,dissipation,ratio\n";
  for (const FlowSample& s : fit.samples)
    csv << s.gamma << ',' << s.initial_label << ',' << s.lhs << ',' << s.dissipation << ',' << s.ratio << '\n';
  r.csv = csv.str();
  return r;
}

Report cmd_simulate(const Params& p) {
  const ModelInstance inst = load_instance(p, 2);
  const auto* c = std::get_if<ClassicalModel>(&inst.model);
  if (!c) throw ConfigError("cli: simulate requires a classical model");
  SimConfig config;
  config.potential = c->potential;
  config.gamma = inst.gamma;
  config.dt = p.positive("dt", 1e-2);
  config.n_steps = p.positive_integer("steps", 1000);
  config.n_paths = p.positive_integer("paths", 10000);
  config.seed = static_cast<std::uint64_t>(p.integer("seed", 1));
  config.record_stride = p.integer("record_stride", 0);
  const std::string integrator = p.string("integrator", "baoab");
  if (integrator == "baoab")
    config.integrator = Integrator::baoab;
  else if (integrator == "euler_maruyama")
    config.integrator = Integrator::euler_maruyama;
  else
    throw ConfigError("cli: integrator must be baoab or euler_maruyama");
  const std::string initial = p.string("initial", "point");
  if (initial == "stationary")
    config.initial.kind = InitialCondition::Kind::stationary;
  else if (initial != "point")
    throw ConfigError("cli: initial must be point or stationary");
  config.initial.x0 = p.number("x0", 1.0);
  config.initial.v0 = p.number("v0", 0.0);

  const TrajectoryEnsemble ens = p.flag("overdamped") ? simulate_overdamped(config) : simulate_langevin(config);
  Report r;
  r.json["command"] = "simulate";
  r.json["model"] = inst.name;
  r.json["config"] = ojson::parse(config_json(config));
  r.json["overdamped"] = !ens.langevin;
  r.json["times"] = ens.times;
  ojson observables;
  for (const ObservableSeries& s : ens.observables) observables[s.name] = {{"mean", s.mean}, {"stderr", s.stderr_}};
  r.json["observables"] = observables;
  if (p.has("fit_observable")) {
    const DecayEstimate est = estimate_decay_rate(ens, p.string("fit_observable", "x"),
                                                  FitWindow{p.number("fit_start", 0.0), p.number("fit_end", 0.0)},
                                                  p.number("equilibrium", 0.0));
    r.json["decay"] = {{"nu_hat", est.nu_hat}, {"ci_95", {est.ci_low, est.ci_high}}, {"points_used", est.points_used}};
  }
  std::ostringstream csv;
  write_ensemble_csv(ens, csv);
  r.csv = csv.str();
  return r;
}

Report cmd_formulas(const Params& p) {
  const std::string kind = p.string("kind", "langevin");
  Report r;
  r.json["command"] = "formulas";
  r.json["kind"] = kind;
  try {
    if (kind == "langevin") {
      const double m = p.number("m", 1.0), gamma = p.number("gamma", std::sqrt(m)), c = p.number("c", 1.0);
      r.json["rate"] = langevin_rate(m, gamma, c);
      r.json["optimal_gamma"] = std::sqrt(m);
      r.json["optimal_rate"] = langevin_rate(m, std::sqrt(m), c);
    } else if (kind == "quantum") {
      const double lambda = p.number("lambda_s", 1.0), c1 = p.number("c1", 1.0), c2 = p.number("c2", 1.0);
      r.json["rate"] = quantum_rate(lambda, c1, c2, p.number("gamma", 1.0));
      const double best = c1 / (c2 * std::sqrt(lambda));
      r.json["optimal_gamma"] = best;
      r.json["optimal_rate"] = quantum_rate(lambda, c1, c2, best);
    } else {
      throw ConfigError("cli: kind must be langevin or quantum");
    }
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return r;
}

Report cmd_models(const Params&) {
  Report r;
  r.json["command"] = "models";
  ojson models = ojson::array();
  ModelParams small;
  small.n_x = 8;
  small.n_v = 8;
  for (const CatalogEntry& e : catalog_entries()) {
    ojson entry = describe_model(load_model(e.name, small));
    entry["description"] = e.description;
    models.push_back(entry);
  }
  r.json["models"] = models;
  return r;
}

void print_pretty(const ojson& j, std::ostream& out, const std::string& prefix = "") {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) print_pretty(value, out, prefix.empty() ? key : prefix + "." + key);
  } else if (j.is_array() && !j.empty() && j.front().is_object()) {
    for (std::size_t i = 0; i < j.size(); ++i) print_pretty(j[i], out, prefix + "[" + std::to_string(i) + "]");
  } else {
    out << std::left << std::setw(36) << prefix << ' ' << j.dump() << '\n';
  }
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message, const std::string& module = "") {
  ojson e;
  e["kind"] = kind;
  if (!module.empty()) e["module"] = module;
  e["message"] = message;
  err << ojson{{"error", e}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hypoflow: hypocoercive generators, lifting and convergence rates"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::App*> subs;
  for (const Command& c : commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "TOML configuration file (flags override it)");
    for (const KeySpec& k : c.keys) {
      if (k.type == Type::boolean)
        sub->add_flag("--" + dashed(k.key), flags[c.name + "/" + k.key], k.help);
      else
        sub->add_option("--" + dashed(k.key), raw[c.name + "/" + k.key], k.help);
    }
    subs[c.name] = sub;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    emit_error(err, "config", e.what());
    return kExitConfig;
  }

  try {
    const Command* cmd = nullptr;
    for (const Command& c : commands())
      if (subs[c.name]->parsed()) cmd = &c;
    CLI::App* sub = subs[cmd->name];
    auto spec_for = [&](const std::string& key) -> const KeySpec* {
      for (const KeySpec& k : cmd->keys)
        if (k.key == key) return &k;
      return nullptr;
    };

    json values = json::object();
    if (!config_path.empty()) {
      const json file = load_config_file(config_path);
      for (const auto& [key, value] : file.items()) {
        const std::string name = underscored(key);
        const KeySpec* spec = spec_for(name);
        if (!spec) throw ConfigError("cli: unknown config key '" + key + "' for command " + cmd->name);
        json v = value;
        if (spec->type == Type::number && v.is_number()) v = v.get<double>();
        check_type(*spec, v);
        values[name] = v;
      }
    }
    for (const KeySpec& k : cmd->keys) {
      CLI::Option* opt = sub->get_option("--" + dashed(k.key));
      if (opt->count() == 0) continue;
      values[k.key] = k.type == Type::boolean ? json(flags[cmd->name + "/" + k.key])
                                              : convert(k, raw[cmd->name + "/" + k.key]);
    }
    const Params params(values);

    Report report;
    if (cmd->name == "spectrum") report = cmd_spectrum(params);
    else if (cmd->name == "rate-scan") report = cmd_rate_scan(params);
    else if (cmd->name == "lift-check") report = cmd_lift_check(params);
    else if (cmd->name == "overdamped-limit") report = cmd_overdamped(params);
    else if (cmd->name == "flow-poincare") report = cmd_flow(params);
    else if (cmd->name == "simulate") report = cmd_simulate(params);
    else if (cmd->name == "formulas") report = cmd_formulas(params);
    else report = cmd_models(params);

    const std::string default_format = cmd->name == "rate-scan" || cmd->name == "simulate" ? "csv" : "json";
    const std::string format = params.string("format", default_format);
    if (format != "json" && format != "csv") throw ConfigError("cli: format must be csv or json");
    if (format == "csv" && report.csv.empty()) throw ConfigError("cli: command " + cmd->name + " has no csv output");

    std::ostringstream body;
    if (params.flag("pretty")) print_pretty(report.json, body);
    else if (format == "csv") body << report.csv;
    else body << report.json.dump(2) << '\n';

    if (params.has("output")) {
      std::ofstream file(params.string("output", ""));
      if (!file) throw ConfigError("cli: cannot write '" + params.string("output", "") + "'");
      file << body.str();
    } else {
      out << body.str();
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    emit_error(err, "config", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    emit_error(err, "numerical", e.reason(), e.module());
    return kExitNumerical;
  } catch (const std::exception& e) {
    emit_error(err, "numerical", e.what());
    return kExitNumerical;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace hypoflow
