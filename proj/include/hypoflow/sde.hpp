#pragma once

// Monte Carlo for the Langevin SDE
//   dX = V dt,  dV = -U'(X) dt - gamma V dt + sqrt(2 gamma) dW
// and the overdamped SDE dX = -U'(X) dt + sqrt(2) dW.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hypoflow/classical.hpp"

namespace hypoflow {

enum class Integrator { euler_maruyama, baoab };

struct InitialCondition {
  enum class Kind { point, stationary };
  Kind kind = Kind::point;
  double x0 = 1.0;
  double v0 = 0.0;
};

struct SimConfig {
  PotentialSpec potential = PotentialSpec::quadratic(1.0);
  double gamma = 1.0;
  double dt = 1e-3;
  long n_steps = 1000;
  long n_paths = 1000;
  std::uint64_t seed = 1;
  Integrator integrator = Integrator::baoab;
  InitialCondition initial;
  long record_stride = 0;  // 0: about 200 recorded times

  /// Throws on invalid values or dt * max(gamma, sqrt(U''), 1) > 0.5 and
  /// warns above 0.1. `langevin` selects whether gamma enters the guard.
  void validate(bool langevin) const;
};

/// Observables recorded per time: x, v, x2, v2, cos, sin (v-based ones are
/// omitted for overdamped runs).
struct ObservableSeries {
  std::string name;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample stddev / sqrt(n_paths)
};

struct TrajectoryEnsemble {
  std::vector<double> times;
  std::vector<ObservableSeries> observables;
  SimConfig config;
  bool langevin = true;

  const ObservableSeries& observable(const std::string& name) const;
};

/// Counter-based stream: the k-th draw of path p depends only on (seed, p, k).
class PathStream {
 public:
  using result_type = std::uint64_t;
  PathStream(std::uint64_t seed, std::uint64_t path);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

TrajectoryEnsemble simulate_langevin(const SimConfig& config);
TrajectoryEnsemble simulate_overdamped(const SimConfig& config);

struct FitWindow {
  double t_start = 0.0;
  double t_end = 0.0;  // 0: end of the ensemble
};

struct DecayEstimate {
  double nu_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double amplitude = 0.0;  // fitted |E f(t_fit_start)|-scale prefactor
  int points_used = 0;
};

/// Log-linear weighted least squares of |E f(t) - equilibrium| over the
/// window minus its first 10%, using the leading run of points above 3 SE.
/// Throws "window dominated by noise" when that run has fewer than 10 points.
DecayEstimate estimate_decay_rate(const TrajectoryEnsemble& ensemble, const std::string& observable,
                                  const FitWindow& window = {}, double equilibrium = 0.0);

/// Time, mean and stderr columns at 17 significant digits, preceded by the
/// config as a JSON comment line.
void write_ensemble_csv(const TrajectoryEnsemble& ensemble, std::ostream& out);
std::string config_json(const SimConfig& config);

}  // namespace hypoflow
