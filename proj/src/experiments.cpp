#include "tofwave/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "tofwave/errors.hpp"

namespace tofwave {

BaseWave prepare_wave(const Config& cfg) {
  BaseWave w;
  w.profile = solve_profile(cfg.model.params(), cfg.grid.make(), cfg.profile);
  w.L = assemble_L(w.profile);
  w.adjoint = adjoint_null_vector(w.L, w.profile);
  w.limits = limit_matrices(w.profile.params, w.profile.rest, w.profile.c);
  const Field Lv = w.L.apply(w.profile.v_x);
  w.kernel_residual = weighted_norm(Lv, {0, 0}, w.profile.grid) / weighted_norm(w.profile.v_x, {0, 0}, w.profile.grid);
  return w;
}

ManufacturedCheck manufactured_check(const Config& cfg, double width, double twist, double speed) {
  ProfileProblem prob(cfg.model.params(), cfg.grid.make(), cfg.profile);
  const Field target = twisted_front_dev(prob, width, twist);
  prob.set_source(manufactured_source(prob, target, speed));
  const WaveProfile sol = solve_profile(prob);
  ManufacturedCheck out;
  for (size_t j = 0; j < target.size(); ++j)
    out.sup_error = std::max(out.sup_error, (sol.dev[j] - target[j]).cwiseAbs().maxCoeff());
  out.speed_error = std::abs(sol.c - speed);
  out.iterations = sol.iterations;
  return out;
}

// ---------------------------------------------------------------------------

bool DispersionAnalysis::pass() const {
  return critical >= 0 && closest < 1e-10 && tangency.kappa > 0.0 && halving_drift < 0.05 &&
         crescent.valid() && inside_crescent == 0;
}

DispersionAnalysis analyze_dispersion(const LimitMatrices& lm, const SpectralConfig& sc, Exec exec) {
  DispersionAnalysis d;
  d.curves = dispersion_curves(lm, symmetric_nu_grid(sc.nu_max, sc.nu_half), exec);
  d.critical = critical_branch(d.curves);
  if (d.critical < 0) throw Error(ErrorCode::InsufficientSamples, "no plus-side branch");
  const SpectralCurve& crit = d.curves[d.critical];
  d.tangency = fit_tangency(crit, sc.tangency_radius);
  d.tangency_half = fit_tangency(crit, 0.5 * sc.tangency_radius);
  d.closest = d.tangency.closest;
  d.halving_drift = std::abs(d.tangency_half.kappa - d.tangency.kappa) / std::abs(d.tangency.kappa);
  d.crescent = fit_crescent(d.curves, d.tangency.kappa);
  for (const auto& c : d.curves)
    for (const auto& s : c.s) {
      ++d.points;
      if (crescent_contains(s, d.crescent)) ++d.inside_crescent;
    }
  return d;
}

// ---------------------------------------------------------------------------

bool LambdaAnalysis::pass() const {
  return std::abs(derivs.lambda0) < 1e-10 && d1_error < 1e-6 && d2_error < 1e-4 && min_path_ratio > 0.0;
}

LambdaAnalysis analyze_lambda(const LimitMatrices& lm, const ModelParams& p, const SpectralConfig& sc) {
  LambdaAnalysis a;
  a.c = lm.c;
  a.derivs = lambda_derivatives(lm, p);
  a.d1_error = std::abs(a.derivs.d1 * lm.c - 1.0);
  a.d2_error = std::abs(a.derivs.d2 - a.derivs.d2_expected) / std::abs(a.derivs.d2_expected);
  a.kappa_star = 0.5 * std::abs(a.derivs.q);
  a.min_path_ratio = INFINITY;
  const int n = std::max(1, sc.paths);
  for (int i = 0; i < n; ++i) {
    const double coef = n > 1 ? a.kappa_star * i / (n - 1) : 0.0;
    a.paths.push_back(parabolic_path_ratio(lm, coef, sc.path_t_max));
    a.min_path_ratio = std::min(a.min_path_ratio, a.paths.back().min_ratio);
  }
  return a;
}

// ---------------------------------------------------------------------------

bool ResolventAnalysis::pass() const {
  return idempotence < 1e-10 && normalization_error < 1e-10 && complement_ratio < 2.0 &&
         std::abs(kernel_slope + 1.0) <= 0.2;
}

std::vector<cplx> resolvent_path(const SpectralConfig& sc) {
  const int n = std::max(2, sc.s_points);
  std::vector<cplx> s(n);
  for (int i = 0; i < n; ++i) s[i] = sc.s_min * std::pow(sc.s_max / sc.s_min, double(i) / (n - 1));
  return s;
}

namespace {

double loglog_slope(const std::vector<ResolventRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    const double x = std::log(std::abs(r.s)), y = std::log(r.norm_v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Field minus(const Field& a, const Field& b) {
  Field out(a.size());
  for (size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

}  // namespace

ResolventAnalysis analyze_resolvent(const BaseWave& w, const Config& cfg, Exec exec) {
  ResolventAnalysis a;
  const Grid& g = w.profile.grid;
  const Field& psi = w.adjoint.psi2;
  const Field& vx = w.profile.v_x;
  const Field r0 = algebraic_perturbation(cfg.rates.data_decay(), 1.0, PerturbationShape::Modulated, g);
  const Field Pr = projector_Pk(r0, psi, vx, g);
  const Field PPr = projector_Pk(Pr, psi, vx, g);
  a.idempotence = weighted_norm(minus(PPr, Pr), {0, 0}, g) / weighted_norm(Pr, {0, 0}, g);
  a.normalization_error = std::abs(l2_inner(psi, vx, g) - 1.0);

  const Field r = minus(r0, Pr);
  const auto path = resolvent_path(cfg.spectral);
  const double k = cfg.rates.k, mu = cfg.rates.mu;
  a.complement_rows = resolvent_probe(w.L, r, path, k, mu, psi, vx, exec);
  a.kernel_rows = resolvent_probe(w.L, vx, path, k, mu, psi, vx, exec);
  double lo = INFINITY, hi = 0.0;
  for (const auto& row : a.complement_rows) {
    lo = std::min(lo, row.norm_v);
    hi = std::max(hi, row.norm_v);
  }
  a.complement_ratio = hi / lo;
  a.kernel_slope = loglog_slope(a.kernel_rows);
  return a;
}

// ---------------------------------------------------------------------------

namespace {

SimulationConfig sim_config(const Config& cfg) {
  SimulationConfig sim = cfg.evolution.sim;
  sim.rates = cfg.rates;
  return sim;
}

double data_decay(const Config& cfg) {
  return cfg.evolution.decay > 0.0 ? cfg.evolution.decay : cfg.rates.data_decay();
}

}  // namespace

bool LinearDecayExperiment::pass() const {
  return fit.exponent <= target && std::abs(kernel_fit.exponent) <= 0.05;
}

LinearDecayExperiment linear_decay_experiment(const BaseWave& w, const Config& cfg) {
  LinearDecayExperiment e;
  const Grid& g = w.profile.grid;
  const SimulationConfig sim = sim_config(cfg);
  Field u = algebraic_perturbation(data_decay(cfg), 1.0, cfg.evolution.shape, g);
  u = minus(u, projector_Pk(u, w.adjoint.psi2, w.profile.v_x, g));
  e.run = evolve_linear(u, sim, w.L, &w.adjoint.psi2, &w.profile.v_x);
  e.kernel_run = evolve_linear(w.profile.v_x, sim, w.L);
  const auto [t0, t1] = default_fit_window(w.profile, sim.t_final, cfg.evolution.fit_t0);
  e.floor = detect_noise_floor(e.run.norm_H1k);
  e.fit = fit_decay(e.run.t, e.run.norm_H1k, t0, t1, cfg.evolution.floor_factor * e.floor);
  e.kernel_fit = fit_decay(e.kernel_run.t, e.kernel_run.norm_H1k, t0, t1);
  e.target = -0.5 * cfg.rates.m_star() + 0.3;
  return e;
}

NonlinearExperiment nonlinear_experiment(const BaseWave& w, const Config& cfg, double amplitude,
                                         double shift) {
  NonlinearExperiment e;
  e.amplitude = amplitude;
  e.shift = shift;
  const Grid& g = w.profile.grid;
  const SimulationConfig sim = sim_config(cfg);
  Field u0;
  if (shift != 0.0) {
    const WaveProfile moved = resolve_shifted(w.profile, w.profile.options.template_center + shift);
    u0 = minus(moved.v_star, w.profile.v_star);
  } else {
    u0 = algebraic_perturbation(data_decay(cfg), amplitude, cfg.evolution.shape, g);
  }
  e.initial_norm = weighted_norm(u0, {cfg.rates.data_decay(), 1}, g);
  e.run = evolve_nonlinear(u0, sim, w.profile, w.adjoint.psi2);

  std::vector<double> t, norm, tau;
  e.all_valid = true;
  for (const auto& s : e.run.states) {
    t.push_back(s.t);
    norm.push_back(s.norm_H1k);
    tau.push_back(s.tau);
    e.all_valid = e.all_valid && s.valid;
  }
  const double mstar = cfg.rates.m_star();
  e.rate_target = -0.5 * (mstar - 2.0) + 0.3;
  e.phase_target = 0.5 * (mstar - 4.0) - 0.3;
  const auto [t0, t1] = default_fit_window(w.profile, sim.t_final, cfg.evolution.fit_t0);
  e.floor = detect_noise_floor(norm);
  if (shift == 0.0) e.fit = fit_decay(t, norm, t0, t1, cfg.evolution.floor_factor * e.floor);
  // The phase settles well before the norm window opens, so its tail fit starts early.
  e.phase = asymptotic_phase(t, tau, 0.5 * (mstar - 4.0), 1.0);
  return e;
}

double phase_linearity(const std::vector<double>& amplitude, const std::vector<double>& tau_inf) {
  if (amplitude.size() != tau_inf.size() || amplitude.empty())
    throw Error(ErrorCode::DimensionMismatch, "amplitude/phase lists");
  std::vector<double> r;
  for (size_t i = 0; i < amplitude.size(); ++i) r.push_back(std::abs(tau_inf[i]) / amplitude[i]);
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v / mean - 1.0));
  return worst;
}

}  // namespace tofwave
