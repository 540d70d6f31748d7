#include "hypoflow/sde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>

#include "json.hpp"

#include "hypoflow/error.hpp"
#include "hypoflow/parallel.hpp"

namespace hypoflow {
namespace {

constexpr const char* kModule = "sde-sim";
constexpr long kChunk = 1024;
constexpr double kBlowUp = 1e8;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Sums {
  std::vector<double> first;   // [record][observable]
  std::vector<double> second;
};

std::vector<std::string> observable_names(bool langevin) {
  if (langevin) return {"x", "v", "x2", "v2", "cos", "sin"};
  return {"x", "x2", "cos", "sin"};
}

// Draw x from mu_x ~ exp(-U) by rejection against the uniform law on the torus.
double sample_periodic(const PotentialSpec& u, double u_min, PathStream& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (;;) {
    const double x = 2.0 * std::numbers::pi * uniform(rng);
    if (uniform(rng) <= std::exp(-(u.value(x) - u_min))) return x;
  }
}

double potential_minimum(const PotentialSpec& u) {
  if (u.kind() == PotentialSpec::Kind::quadratic) return 0.0;
  double lowest = u.value(0.0);
  for (int i = 1; i < 4096; ++i) lowest = std::min(lowest, u.value(2.0 * std::numbers::pi * i / 4096));
  // Grid minimum can overshoot the true one by at most curvature * h^2 / 8.
  const double h = 2.0 * std::numbers::pi / 4096;
  return lowest - u.curvature_bound() * h * h / 8.0;
}

long stride_for(const SimConfig& c) { return c.record_stride > 0 ? c.record_stride : std::max(1L, c.n_steps / 200); }

TrajectoryEnsemble run(const SimConfig& config, bool langevin) {
  config.validate(langevin);
  const std::vector<std::string> names = observable_names(langevin);
  const std::size_t n_obs = names.size();
  const long stride = stride_for(config);
  const std::size_t n_records = static_cast<std::size_t>(config.n_steps / stride) + 1;
  const long n_chunks = (config.n_paths + kChunk - 1) / kChunk;
  const double u_min = potential_minimum(config.potential);
  const PotentialSpec& u = config.potential;
  const double h = config.dt;
  const double gamma = config.gamma;
  const double friction = std::exp(-gamma * h);
  const double kick = std::sqrt(1.0 - friction * friction);

  std::vector<Sums> chunks(static_cast<std::size_t>(n_chunks));
  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
    Sums& sums = chunks[c];
    sums.first.assign(n_records * n_obs, 0.0);
    sums.second.assign(n_records * n_obs, 0.0);
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(config.n_paths, begin + kChunk);
    for (long p = begin; p < end; ++p) {
      PathStream rng(config.seed, static_cast<std::uint64_t>(p));
      std::normal_distribution<double> normal;
      double x = config.initial.x0, v = config.initial.v0;
      if (config.initial.kind == InitialCondition::Kind::stationary) {
        x = u.kind() == PotentialSpec::Kind::quadratic ? normal(rng) / std::sqrt(u.curvature())
                                                       : sample_periodic(u, u_min, rng);
        v = normal(rng);
      }
      double pending = normal(rng);  // carried noise for the overdamped "baoab" limit
      auto record = [&](std::size_t r) {
        const double values[] = {x, v, x * x, v * v, std::cos(x), std::sin(x)};
        const double overdamped[] = {x, x * x, std::cos(x), std::sin(x)};
        const double* row = langevin ? values : overdamped;
        for (std::size_t k = 0; k < n_obs; ++k) {
          sums.first[r * n_obs + k] += row[k];
          sums.second[r * n_obs + k] += row[k] * row[k];
        }
      };
      record(0);
      for (long step = 1; step <= config.n_steps; ++step) {
        if (langevin) {
          if (config.integrator == Integrator::baoab) {
            v -= 0.5 * h * u.derivative(x);
            x += 0.5 * h * v;
            v = friction * v + kick * normal(rng);
            x += 0.5 * h * v;
            v -= 0.5 * h * u.derivative(x);
          } else {
            const double force = u.derivative(x);
            x += h * v;
            v += h * (-force - gamma * v) + std::sqrt(2.0 * gamma * h) * normal(rng);
          }
        } else if (config.integrator == Integrator::baoab) {
          // Leimkuhler-Matthews: the high-friction limit of BAOAB.
          const double next = normal(rng);
          x += -h * u.derivative(x) + std::sqrt(0.5 * h) * (pending + next);
          pending = next;
        } else {
          x += -h * u.derivative(x) + std::sqrt(2.0 * h) * normal(rng);
        }
        if (!(std::abs(x) <= kBlowUp) || !(std::abs(v) <= kBlowUp)) throw Error(kModule, "blow-up: reduce dt");
        if (step % stride == 0) record(static_cast<std::size_t>(step / stride));
      }
    }
  });

  TrajectoryEnsemble out;
  out.config = config;
  out.langevin = langevin;
  for (std::size_t r = 0; r < n_records; ++r) out.times.push_back(static_cast<double>(r * stride) * h);
  const double n = static_cast<double>(config.n_paths);
  for (std::size_t k = 0; k < n_obs; ++k) {
    ObservableSeries series{names[k], std::vector<double>(n_records), std::vector<double>(n_records)};
    for (std::size_t r = 0; r < n_records; ++r) {
      double s1 = 0.0, s2 = 0.0;
      for (const Sums& sums : chunks) {
        s1 += sums.first[r * n_obs + k];
        s2 += sums.second[r * n_obs + k];
      }
      const double mean = s1 / n;
      const double var = n > 1.0 ? std::max(0.0, (s2 - s1 * mean) / (n - 1.0)) : 0.0;
      series.mean[r] = mean;
      series.stderr_[r] = std::sqrt(var / n);
    }
    out.observables.push_back(std::move(series));
  }
  return out;
}

}  // namespace

PathStream::PathStream(std::uint64_t seed, std::uint64_t path) : key_(splitmix64(splitmix64(seed) ^ path)) {}

PathStream::result_type PathStream::operator()() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * counter_++); }

void SimConfig::validate(bool langevin) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError(kModule, "dt must be positive");
  if (n_steps < 1) throw ConfigError(kModule, "n_steps must be positive");
  if (n_paths < 2) throw ConfigError(kModule, "n_paths must be at least 2");
  if (record_stride < 0) throw ConfigError(kModule, "record_stride must be nonnegative");
  if (langevin && (!(gamma > 0.0) || !std::isfinite(gamma))) throw ConfigError(kModule, "gamma must be positive");
  if (!std::isfinite(initial.x0) || !std::isfinite(initial.v0)) throw ConfigError(kModule, "non-finite initial state");
  const double scale = std::max({langevin ? gamma : 0.0, std::sqrt(potential.curvature_bound()), 1.0});
  if (dt * scale > 0.5) throw ConfigError(kModule, "dt too large for stability (dt * scale > 0.5)");
  if (dt * scale > 0.1) std::clog << "warning: " << kModule << ": dt * scale = " << dt * scale << " exceeds 0.1\n";
}

const ObservableSeries& TrajectoryEnsemble::observable(const std::string& name) const {
  for (const ObservableSeries& s : observables)
    if (s.name == name) return s;
  throw Error(kModule, "unknown observable '" + name + "'");
}

TrajectoryEnsemble simulate_langevin(const SimConfig& config) { return run(config, true); }

TrajectoryEnsemble simulate_overdamped(const SimConfig& config) { return run(config, false); }

DecayEstimate estimate_decay_rate(const TrajectoryEnsemble& ensemble, const std::string& observable,
                                  const FitWindow& window, double equilibrium) {
  const ObservableSeries& series = ensemble.observable(observable);
  const double t_end = window.t_end > 0.0 ? window.t_end : ensemble.times.back();
  if (!(t_end > window.t_start)) throw Error(kModule, "empty fit window");
  const double t_fit = window.t_start + 0.1 * (t_end - window.t_start);

  std::vector<double> t, y, w;
  for (std::size_t i = 0; i < ensemble.times.size(); ++i) {
    const double ti = ensemble.times[i];
    if (ti < t_fit || ti > t_end) continue;
    const double signal = std::abs(series.mean[i] - equilibrium);
    const double se = series.stderr_[i];
    if (!(signal > 3.0 * se) || signal <= 0.0) break;
    t.push_back(ti);
    y.push_back(std::log(signal));
    // Var(log |m|) ~ (se / |m|)^2.
    const double rel = std::max(se / signal, 1e-12);
    w.push_back(1.0 / (rel * rel));
  }
  if (t.size() < 10) throw Error(kModule, "window dominated by noise");

  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sw += w[i];
    st += w[i] * t[i];
    sy += w[i] * y[i];
    stt += w[i] * t[i] * t[i];
    sty += w[i] * t[i] * y[i];
  }
  const double det = sw * stt - st * st;
  if (!(det > 0.0)) throw Error(kModule, "window dominated by noise");
  const double slope = (sw * sty - st * sy) / det;
  const double intercept = (stt * sy - st * sty) / det;
  const double slope_se = std::sqrt(sw / det);

  DecayEstimate out;
  out.nu_hat = -slope;
  out.ci_low = out.nu_hat - 1.96 * slope_se;
  out.ci_high = out.nu_hat + 1.96 * slope_se;
  out.amplitude = std::exp(intercept);
  out.points_used = static_cast<int>(t.size());
  return out;
}

std::string config_json(const SimConfig& c) {
  nlohmann::ordered_json j;
  j["potential"] = c.potential.describe();
  j["gamma"] = c.gamma;
  j["dt"] = c.dt;
  j["n_steps"] = c.n_steps;
  j["n_paths"] = c.n_paths;
  j["seed"] = c.seed;
  j["integrator"] = c.integrator == Integrator::baoab ? "baoab" : "euler_maruyama";
  j["initial"] = c.initial.kind == InitialCondition::Kind::stationary ? "stationary" : "point";
  j["x0"] = c.initial.x0;
  j["v0"] = c.initial.v0;
  return j.dump();
}

void write_ensemble_csv(const TrajectoryEnsemble& ensemble, std::ostream& out) {
  out << "# config: " << config_json(ensemble.config) << '\n';
  out << "time";
  for (const ObservableSeries& s : ensemble.observables) out << ',' << s.name << "_mean," << s.name << "_stderr";
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < ensemble.times.size(); ++i) {
    out << ensemble.times[i];
    for (const ObservableSeries& s : ensemble.observables) out << ',' << s.mean[i] << ',' << s.stderr_[i];
    out << '\n';
  }
}

}  // namespace hypoflow
