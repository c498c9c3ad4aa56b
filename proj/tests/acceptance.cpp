// One line per acceptance criterion; exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "classifier_instances.hpp"
#include "tofwave/errors.hpp"
#include "tofwave/experiments.hpp"
#include "tofwave/verify.hpp"

using namespace tofwave;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const BaseWave& wave() {
  static const BaseWave w = prepare_wave(Config{});
  return w;
}

Outcome rest_state_check() {
  const Config cfg;
  const ModelParams p = cfg.model.params();
  const RestState rs = solve_rest_state(p);
  // g1(r) = a r^2 + b r + c, stable root has g1' < 0
  const double a = cfg.model.beta4.real(), b = cfg.model.beta2.real(), c = cfg.model.beta0.real();
  const double disc = std::sqrt(b * b - 4.0 * a * c);
  double r = (-b + disc) / (2.0 * a);
  if (2.0 * a * r + b >= 0.0) r = (-b - disc) / (2.0 * a);
  const double g2 = cfg.model.beta0.imag() + cfg.model.beta2.imag() * r + cfg.model.beta4.imag() * r * r;
  const double err = std::max(std::abs(rs.r_inf - r), std::abs(rs.omega + g2));
  const AssumptionReport ar = validate_assumptions(p, rs);
  return {err < 1e-12 && ar.all(),
          fmt("r_inf %.15g, omega %.15g, oracle error %.1e, A1 %d A2 %d A3 %d", rs.r_inf, rs.omega, err, ar.a1, ar.a2,
              ar.a3)};
}

Outcome profile_check() {
  const ManufacturedCheck m = manufactured_check(Config{});
  const BaseWave& w = wave();
  const TailRates& t = w.profile.tail_rates;
  const bool ok = m.sup_error < 1e-8 && w.kernel_residual < 1e-4 && t.left_ok && t.right_ok;
  return {ok, fmt("manufactured %.1e, kernel residual %.1e, tails %.4f/%.4f vs %.4f/%.4f, c = %.10f", m.sup_error,
                  w.kernel_residual, t.left, t.right, t.left_pred, t.right_pred, w.profile.c)};
}

Outcome lambda_check() {
  const Config cfg;
  const LambdaAnalysis a = analyze_lambda(wave().limits, wave().profile.params, cfg.spectral);
  return {a.pass() && a.paths.size() == 5,
          fmt("|lambda(0)| %.1e, d1 error %.1e, d2 error %.1e, %zu paths, min ratio %.4f", std::abs(a.derivs.lambda0),
              a.d1_error, a.d2_error, a.paths.size(), a.min_path_ratio)};
}

Outcome dispersion_check() {
  const DispersionAnalysis d = analyze_dispersion(wave().limits, Config{}.spectral);
  return {d.pass(), fmt("closest %.1e, kappa %.6f, halving drift %.1e, %d of %d points inside crescent", d.closest,
                        d.tangency.kappa, d.halving_drift, d.inside_crescent, d.points)};
}

Outcome classifier_check() {
  std::mt19937_64 rng(2024);
  int failures = 0, total = 0;
  for (int m : {2, 3, 5})
    for (int i = 0; i < 100; ++i) {
      const auto h = testing::hyperbolic_instance(m, rng);
      failures += !(classify_block_matrix(h.A, h.B, h.C) == BlockCounts{m, 0, m});
      const auto c = testing::center_instance(m, rng);
      failures += !(classify_block_matrix(c.A, c.B, c.C) == BlockCounts{m, 1, m - 1});
      total += 2;
    }
  return {failures == 0, fmt("%d of %d instances misclassified", failures, total)};
}

Outcome kernel_check() {
  const Config cfg;
  const SweepSpec& s = cfg.verify.sweep;
  std::vector<KernelReport> reps;
  for (double k : {1.0, 2.0, 3.0, 5.0}) reps.push_back(kernel_bound_1(k, 1.0, s, true));
  reps.push_back(kernel_bound_1(3.0, 0.5, s));
  reps.push_back(kernel_bound_1(2.0, 0.0, s));
  for (double q : {0.0, 0.5, 0.9}) reps.push_back(kernel_bound_2(q, s));
  for (double k : {1.0, 2.0, 3.0}) reps.push_back(kernel_bound_3(k, cfg.verify.kernel3_beta0, s));
  bool ok = true;
  double drift = 0.0, margin = INFINITY;
  for (const auto& r : reps) {
    ok = ok && r.pass && std::isfinite(r.sup) && r.refinement_drift < 0.01;
    drift = std::max(drift, r.refinement_drift);
    if (r.bound > 0.0) margin = std::min(margin, r.bound - r.sup);
  }
  return {ok, fmt("%zu sweeps, worst refinement drift %.1e, smallest explicit-constant margin %.4f", reps.size(), drift,
                  margin)};
}

Outcome gronwall_check() {
  bool ok = true;
  std::string detail;
  const auto times = default_gronwall_times();
  for (double p : {1.5, 2.0, 3.0}) {
    const GronwallKernelReport g = gronwall_kernel_constant(p, times);
    ok = ok && g.pass && g.sup <= g.c3 && g.max_error < 1e-3;
    detail += fmt("p=%g sup %.4f <= %.4f; ", p, g.sup, g.c3);
  }
  const double eps = gronwall_eps_threshold(2.0, 1.0, 1.0);
  const GronwallIterationReport it = gronwall_iteration_check(2.0, 1.0, 1.0, eps, 1000.0, 0.25);
  ok = ok && it.converged && it.bound_holds;
  detail += fmt("iteration at eps %.4g: worst ratio %.4f", eps, it.worst_ratio);
  return {ok, detail};
}

Outcome resolvent_check() {
  const ResolventAnalysis a = analyze_resolvent(wave(), Config{});
  return {a.pass(), fmt("idempotence %.1e, normalization %.1e, complement ratio %.4f, kernel slope %.4f", a.idempotence,
                        a.normalization_error, a.complement_ratio, a.kernel_slope)};
}

Outcome linear_check() {
  Config cfg;
  cfg.evolution.sim.t_final = 200.0;
  const LinearDecayExperiment e = linear_decay_experiment(wave(), cfg);
  return {e.pass(), fmt("exponent %.3f (<= %.3f), kernel exponent %.1e, window [%g, %.1f]", e.fit.exponent, e.target,
                        e.kernel_fit.exponent, e.fit.t0, e.fit.t1)};
}

Outcome nonlinear_check() {
  Config cfg;
  cfg.evolution.sim.t_final = 100.0;
  bool ok = true;
  std::string detail;
  std::vector<double> amps, taus;
  for (double a : {1e-3, 3e-3, 1e-2}) {
    const NonlinearExperiment e = nonlinear_experiment(wave(), cfg, a);
    ok = ok && e.decay_ok() && e.phase_ok();
    amps.push_back(a);
    taus.push_back(e.phase.tau_inf);
    detail += fmt("a=%g exp %.2f p %.2f; ", a, e.fit.exponent, e.phase.p);
  }
  const double lin = phase_linearity(amps, taus);
  ok = ok && lin < 0.3;
  Config shift_cfg;
  shift_cfg.evolution.sim.t_final = 40.0;
  const double delta = 0.05;
  const NonlinearExperiment s = nonlinear_experiment(wave(), shift_cfg, 0.0, delta);
  const double err = std::abs(s.phase.tau_inf - delta);
  ok = ok && s.all_valid && err < 1e-6;
  detail += fmt("tau_inf linearity %.3f; shift %.2f recovered to %.1e", lin, delta, err);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"rest state and assumptions", rest_state_check},
      {"profile correctness", profile_check},
      {"critical eigenvalue branch", lambda_check},
      {"dispersion geometry", dispersion_check},
      {"block matrix classifier", classifier_check},
      {"weighted kernel bounds", kernel_check},
      {"Gronwall convolution", gronwall_check},
      {"projector and resolvent", resolvent_check},
      {"linear semigroup decay", linear_check},
      {"nonlinear stability and phase", nonlinear_check},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
