// Acceptance suite: one line per criterion, exit status 1 if any fails.
// Reference quantities are computed here independently of the library where
// possible (whitened matrices, Jacobi SVD null spaces, Eigen's MatrixFunctions).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "hypoflow/catalog.hpp"
#include "hypoflow/classical.hpp"
#include "hypoflow/error.hpp"
#include "hypoflow/flow_poincare.hpp"
#include "hypoflow/lifting.hpp"
#include "hypoflow/quantum.hpp"
#include "hypoflow/sde.hpp"

using namespace hypoflow;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

// ---------------------------------------------------------------------------
// independent linear algebra

// R L R^{-1} with gram = R^H R from Eigen's LLT (R = L^H of the lower factor).
Matrix whiten(const LinOp& op) {
  Eigen::LLT<Matrix> llt(op.space.gram());
  const Matrix r = llt.matrixU();
  return r * op.matrix * r.inverse();
}

Matrix null_space(const Matrix& m, double tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  Index rank = 0;
  while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

// Null space from the Hermitian eigenproblem of m^H m; cheaper than Jacobi SVD
// for the large structural checks. Kernels there are separated by O(1) gaps,
// so the squared singular values leave plenty of room.
Matrix gram_null_space(const Matrix& gram, double tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.adjoint()));
  const Eigen::VectorXd& e = es.eigenvalues();
  Index k = 0;
  while (k < e.size() && e(k) <= tol * e(e.size() - 1)) ++k;
  return es.eigenvectors().leftCols(k);
}

double hermitian_norm(const Matrix& h) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

Matrix orth_projector(const Matrix& basis) { return basis * basis.adjoint(); }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double min_nonzero_singular(const Matrix& m, double tol = 1e-9) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  double out = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) out = s(i);
  return out;
}

// First t with ||e^{tL} (I - P)|| <= 1/e, by doubling and bisection.
double relaxation_by_bisection(const Matrix& l, const Matrix& complement, double t0) {
  auto decay = [&](double t) { return spectral_norm((Matrix(t * l)).exp() * complement); };
  const double target = std::exp(-1.0);
  double lo = 0.0, hi = t0;
  while (decay(hi) > target) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    (decay(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// catalog

std::vector<ModelInstance> catalog(int truncation) {
  ModelParams p;
  p.n_x = truncation;
  p.n_v = truncation;
  std::vector<ModelInstance> out;
  out.push_back(load_model("quadratic", p));
  out.push_back(load_model("periodic-free", p));
  out.push_back(load_model("periodic-cos", p));
  ModelParams general = p;
  general.cos_coeffs = {1.0, 0.5};
  general.sin_coeffs = {0.3};
  out.push_back(load_model("periodic", general));
  out.push_back(load_model("thermal-qubit", p));
  out.push_back(load_model("two-qubit", p));
  return out;
}

// ---------------------------------------------------------------------------
// criteria

void structural_invariants(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  double worst_sym = 0.0, worst_php = 0.0, worst_kernel = 0.0, worst_poincare = 0.0;
  for (const ModelInstance& inst : catalog(16)) {
    const GeneratorDecomposition d = inst.decomposition();
    const Matrix a = whiten(d.l_a), s = whiten(d.l_s);
    worst_sym = std::max({worst_sym, (a + a.adjoint()).norm() / a.norm(), (s - s.adjoint()).norm() / s.norm()});

    const Matrix ata = a.adjoint() * a, sts = s.adjoint() * s;
    const Matrix pi = orth_projector(gram_null_space(sts));
    const Matrix php = pi * a * pi;
    worst_php = std::max(worst_php, std::sqrt(hermitian_norm(php.adjoint() * php)));

    // ker(L) against ker(L_a) intersected with ker(L_s)
    const Matrix l = a + d.gamma * s;
    const Matrix ker_l = gram_null_space(l.adjoint() * l);
    const Matrix ker_both = gram_null_space(ata / ata.norm() + sts / sts.norm());
    const double diff =
        ker_l.cols() == ker_both.cols() ? hermitian_norm(orth_projector(ker_l) - orth_projector(ker_both)) : 1.0;
    worst_kernel = std::max(worst_kernel, diff);
    o.require(diff < 1e-8, inst.name + " kernel characterization");

    if (!inst.is_quantum()) {
      // ||(I - Pi_v) f||^2 <= <f, -L_s f>, reported as the largest ratio
      const Matrix complement = Matrix::Identity(a.rows(), a.cols()) - pi;
      for (int trial = 0; trial < 100; ++trial) {
        Vector f(a.rows());
        for (Index i = 0; i < f.size(); ++i) f(i) = Scalar(normal(rng), normal(rng));
        const double lhs = (complement * f).squaredNorm();
        const double rhs = -f.dot(s * f).real();
        o.require(lhs <= rhs + 1e-12, inst.name + " Gaussian Poincare");
        worst_poincare = std::max(worst_poincare, lhs / rhs);
      }
    }
  }
  o.require(worst_sym < 1e-10, "(anti)symmetry residual");
  o.require(worst_php < 1e-10, "Pi_s L_a Pi_s residual");
  o.detail << "max sym residual " << worst_sym << ", max php " << worst_php << ", max kernel mismatch "
           << worst_kernel << ", max Poincare ratio " << worst_poincare;
}

void overdamped_equivalence(Outcome& o) {
  double worst = 0.0;
  for (double m : {0.01, 0.04, 0.16, 1.0}) {
    const OverdampedLimit lim = overdamped_limit(build_langevin(PotentialSpec::quadratic(m), 16, 16));
    const double err = lim.gap ? std::abs(*lim.gap - m) : 1.0;
    worst = std::max(worst, err);
    o.require(err < 1e-6, "gap of L_O at m=" + std::to_string(m));
  }

  // brute-force L_O for the two-qubit model in whitened coordinates
  const GeneratorDecomposition d = load_model("two-qubit").decomposition();
  const Matrix a = whiten(d.l_a), s = whiten(d.l_s);
  const Matrix b = null_space(s);
  Eigen::SelfAdjointEigenSolver<Matrix> es(-0.5 * (s + s.adjoint()));
  Eigen::VectorXd inv = es.eigenvalues();
  for (Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > 1e-9 * inv.maxCoeff() ? 1.0 / inv(i) : 0.0;
  const Matrix s_pinv = es.eigenvectors() * inv.cast<Scalar>().asDiagonal() * es.eigenvectors().adjoint();
  const Matrix brute = -(a * b).adjoint() * s_pinv * (a * b);

  const OverdampedLimit lim = overdamped_limit(d);
  Eigen::LLT<Matrix> llt(d.space().gram());
  const Matrix w = Matrix(llt.matrixU()) * lim.basis;  // orthonormal in whitened coordinates
  const Matrix u = b.adjoint() * w;                     // change of basis between the two frames
  const double mismatch = b.cols() == 4 && lim.basis.cols() == 4 ? (u.adjoint() * brute * u - lim.generator.matrix).norm() : 1.0;
  o.require(mismatch < 1e-8, "two-qubit L_O against brute force");
  o.detail << "max |lambda_O - m| " << worst << ", two-qubit L_O mismatch " << mismatch;
}

void sharp_rate(Outcome& o) {
  for (double m : {0.01, 0.04, 0.16}) {
    RateScanOptions opt;
    opt.prefactors = false;
    const RateReport r = rate_scan(build_langevin(PotentialSpec::quadratic(m), 10, 10), opt);
    const double spacing = std::log(r.gamma_grid[1] / r.gamma_grid[0]);
    const double rel = std::abs(r.refined_gap - std::sqrt(m)) / std::sqrt(m);
    const double offset = std::abs(std::log(r.argmax_gamma / (2.0 * std::sqrt(m))));
    o.require(rel < 1e-4, "max gap at m=" + std::to_string(m));
    o.require(offset <= spacing * (1.0 + 1e-9), "argmax gamma at m=" + std::to_string(m));
    o.detail << "m=" << m << ": gap " << r.refined_gap << " (rel err " << rel << "), argmax " << r.argmax_gamma
             << " at " << offset / spacing << " spacings; ";
  }
}

void speedup_ceiling(Outcome& o) {
  for (const ModelInstance& inst : catalog(8)) {
    const GeneratorDecomposition d = inst.decomposition();
    const LiftReport lift = check_lift_conditions(d);
    RateScanOptions opt;
    const double centre = lift.overdamped_gap ? *lift.overdamped_gap : lift.coercivity_lambda_s;
    opt.gamma_grid = default_gamma_grid(centre, 24);
    opt.refine = false;
    const RateReport r = rate_scan(d, opt);
    const RateBoundCheck check = check_rate_bounds(r, lift);
    o.require(check.lemma_holds, inst.name + " Lemma bound");
    o.detail << inst.name << ": lemma ratio " << check.worst_lemma_ratio;
    if (check.theorem_holds) {
      o.require(*check.theorem_holds, inst.name + " ceiling bound");
      o.detail << ", ceiling ratio " << check.worst_theorem_ratio << "; ";
    } else {
      o.detail << ", ceiling degenerate (coercive); ";
    }
  }
}

void relaxation_bound(Outcome& o) {
  double worst_t = 0.0, worst_s = 0.0, min_ratio = 1e300;
  for (const ModelInstance& inst : catalog(8)) {
    for (double gamma : log_grid(0.1, 10.0, 5)) {
      const LinOp gen = inst.decomposition(gamma).generator();
      const Matrix l = whiten(gen);
      const Matrix complement = Matrix::Identity(l.rows(), l.cols()) - orth_projector(null_space(l));
      const double s_ref = min_nonzero_singular(l);
      const double t_ref = relaxation_by_bisection(l, complement, 1.0 / s_ref);
      const RelaxationReport rep = relaxation_time(gen);
      worst_s = std::max(worst_s, std::abs(rep.singular_gap - s_ref) / s_ref);
      worst_t = std::max(worst_t, std::abs(rep.t_rel - t_ref) / t_ref);
      min_ratio = std::min(min_ratio, t_ref * 2.0 * s_ref);
      o.require(t_ref * 2.0 * s_ref >= 1.0 - 1e-9, inst.name + " t_rel >= 1/(2s)");
    }
  }
  o.require(worst_s < 1e-8, "singular gap agreement");
  o.require(worst_t < 2e-3, "relaxation time agreement");
  o.detail << "min 2 s t_rel " << min_ratio << ", max singular-gap deviation " << worst_s
           << ", max t_rel deviation " << worst_t;
}

void flow_poincare_pipeline(Outcome& o) {
  for (double m : {0.04, 1.0}) {
    const GeneratorDecomposition d = build_langevin(PotentialSpec::quadratic(m), 8, 8);
    const double root = std::sqrt(m);
    const FlowFit fit = fit_constants(d, log_grid(root / 8.0, 8.0 * root, 12));
    RateScanOptions opt;
    opt.prefactors = false;
    const double measured = rate_scan(d, opt).refined_gap;
    const double factor = fit.fit.predicted_max / measured;
    o.require(factor >= 0.25 && factor <= 4.0, "prediction factor at m=" + std::to_string(m));
    const std::vector<LabeledState> x0 = default_initial_states(d, fit.fit.gamma_max);
    const DecayCheck decay = verify_decay(d, fit.fit.gamma_max, fit.fit.predicted_max, fit.horizon_T, x0);
    o.require(decay.passed(), "decay verification at m=" + std::to_string(m));
    o.detail << "m=" << m << ": C1 " << fit.fit.c1 << ", C2 " << fit.fit.c2 << ", predicted/measured " << factor
             << "; ";
  }
  std::vector<double> gammas, ratios;
  for (double g : log_grid(0.1, 10.0, 12)) {
    gammas.push_back(g);
    ratios.push_back(2.0 + 3.0 * g * g);
  }
  const RatioFit synthetic = fit_ratio_model(gammas, ratios);
  const double err = std::max(std::abs(synthetic.c1 - 2.0), std::abs(synthetic.c2 - 3.0));
  o.require(err < 1e-8, "synthetic recovery");
  o.detail << "synthetic error " << err;
}

void quantum_suite(Outcome& o) {
  const ModelInstance thermal = load_model("thermal-qubit");
  const GeneratorDecomposition dt = thermal.decomposition();
  o.require(check_lift_conditions(dt).coercive(), "thermal qubit coercive");
  RateScanOptions opt;
  opt.refine = false;
  const RateReport rt = rate_scan(dt, opt);
  double worst_c = 0.0;
  bool monotone = true;
  for (std::size_t i = 0; i < rt.gamma_grid.size(); ++i) {
    worst_c = std::max(worst_c, rt.prefactors[i]);
    monotone = monotone && rt.monotone[i];
  }
  o.require(worst_c <= 1.0 + 5e-3, "thermal prefactor 1");
  o.require(monotone, "thermal monotone decay");

  const ModelInstance two = load_model("two-qubit");
  const auto& q = std::get<QuantumModel>(two.model);
  const GeneratorDecomposition d2 = two.decomposition();
  const Index ker_ls = null_space(d2.l_s.matrix).cols(), ker_l = null_space(d2.generator().matrix).cols();
  o.require(ker_ls == 4 && ker_l == 2, "two-qubit kernel dims");
  const LiftReport lift = check_lift_conditions(d2);
  o.require(!lift.coercive() && lift.strict_subspace, "two-qubit hypocoercive");

  // trace preservation: tr(e^{t L^dag} rho) = tr(rho) for a random state
  const Matrix schrodinger = schrodinger_superoperator(q.lindblad);
  const Index d = q.lindblad.dim();
  Matrix g = Matrix::Random(d, d);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  double trace_err = std::abs(vec(Matrix::Identity(d, d)).dot(schrodinger * vec(rho)));
  for (double t : {0.5, 2.0, 10.0})
    trace_err = std::max(trace_err, std::abs(unvec(Matrix(t * schrodinger).exp() * vec(rho), d).trace() - Scalar(1.0)));
  o.require(trace_err < 1e-9, "trace preservation");
  const double stat = (schrodinger * vec(q.stationary.sigma.matrix)).norm();
  o.require(stat < 1e-10, "stationarity residual");

  RateScanOptions scan;
  scan.prefactors = false;
  const RateReport r2 = rate_scan(d2, scan);
  std::size_t best = 0;
  for (std::size_t i = 0; i < r2.spectral_gaps.size(); ++i)
    if (r2.spectral_gaps[i] > r2.spectral_gaps[best]) best = i;
  const bool interior = best > 0 && best + 1 < r2.spectral_gaps.size() &&
                        r2.spectral_gaps[best] > 1.5 * std::max(r2.spectral_gaps.front(), r2.spectral_gaps.back());
  o.require(interior, "interior maximum of the rate curve");
  o.detail << "thermal max C " << worst_c << ", two-qubit kernels " << ker_ls << "/" << ker_l << ", trace err "
           << trace_err << ", stationarity " << stat << ", peak gamma " << r2.gamma_grid[best] << " (gap "
           << r2.spectral_gaps[best] << " vs ends " << r2.spectral_gaps.front() << ", " << r2.spectral_gaps.back()
           << ")";
}

double mc_rate(double m, double gamma, bool overdamped, double dt, long steps) {
  SimConfig c;
  c.potential = PotentialSpec::quadratic(m);
  c.gamma = gamma;
  c.dt = dt;
  c.n_steps = steps;
  c.n_paths = 100000;
  c.seed = 17;
  c.initial.x0 = 10.0;
  // v0 = -sqrt(m) x0 removes the secular t e^{-sqrt(m) t} term at critical damping
  c.initial.v0 = overdamped ? 0.0 : -std::sqrt(m) * c.initial.x0;
  const TrajectoryEnsemble ens = overdamped ? simulate_overdamped(c) : simulate_langevin(c);
  return estimate_decay_rate(ens, "x").nu_hat;
}

void monte_carlo(Outcome& o) {
  const double critical = mc_rate(1.0, 2.0, false, 0.01, 1000);
  o.require(std::abs(critical - 1.0) <= 0.2, "critical damping rate");
  const double ballistic = mc_rate(0.01, 0.2, false, 0.1, 1000);
  const double diffusive = mc_rate(0.01, 0.0, true, 0.1, 5000);
  const double factor = ballistic / diffusive;
  o.require(factor >= 5.0, "diffusive-to-ballistic factor");
  o.detail << "nu_hat(m=1, gamma=2) " << critical << ", ballistic " << ballistic << ", diffusive " << diffusive
           << ", factor " << factor;
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "structural invariants", 10.0, structural_invariants},
      {2, "overdamped-limit equivalence", 30.0, overdamped_equivalence},
      {3, "sharp rate and optimal friction", 60.0, sharp_rate},
      {4, "quadratic speed-up ceiling", 60.0, speedup_ceiling},
      {5, "relaxation-time bound", 60.0, relaxation_bound},
      {6, "flow-Poincare pipeline", 120.0, flow_poincare_pipeline},
      {7, "quantum suite", 60.0, quantum_suite},
      {8, "Monte Carlo cross-validation", 300.0, monte_carlo},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.budget_s) {
      o.pass = false;
      o.detail << "; over runtime budget";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.1f s / %.0f s) %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), elapsed,
                c.budget_s, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
