#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tofwave/config.hpp"
#include "tofwave/errors.hpp"
#include "tofwave/experiments.hpp"
#include "tofwave/io.hpp"
#include "tofwave/verify.hpp"

using namespace tofwave;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  int threads = 0;
  bool quiet = false;
  std::vector<std::string> overrides;
  std::vector<double> gronwall_p;
  std::string task;
  std::vector<std::string> vary;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void say(const RunContext& ctx, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void say(const RunContext& ctx, const char* fmt, ...) {
  if (ctx.quiet()) return;
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
}

Json cjson(cplx z) { return Json::array({z.real(), z.imag()}); }

int verdict(const RunContext& ctx) { return ctx.all_passed() ? kOk : kFailed; }

// --- subcommands ---------------------------------------------------------------------------

int cmd_rest_state(const Config& cfg, RunContext& ctx, const Options&) {
  const ModelParams p = cfg.model.params();
  const RestState rs = solve_rest_state(p);
  const AssumptionReport ar = validate_assumptions(p, rs);
  say(ctx, "r_inf      %.15g", rs.r_inf);
  say(ctx, "omega      %.15g", rs.omega);
  say(ctx, "g1'(r_inf) %.15g", rs.dg1);
  say(ctx, "sigma      %.15g %.15g", rs.sigma1, rs.sigma2);
  say(ctx, "A1 %s  alpha1 = %g", ar.a1 ? "ok" : "FAIL", ar.alpha1);
  say(ctx, "A2 %s  g1(0) = %g", ar.a2 ? "ok" : "FAIL", ar.g1_at_zero);
  say(ctx, "A3 %s  margin = %g", ar.a3 ? "ok" : "FAIL", ar.a3_margin);
  say(ctx, "A4 %s", ar.a4_note.c_str());
  Json j = {{"r_inf", rs.r_inf},
            {"v_inf", {rs.v_inf[0], rs.v_inf[1]}},
            {"omega", rs.omega},
            {"dg1", rs.dg1},
            {"dg2", rs.dg2},
            {"sigma", {rs.sigma1, rs.sigma2}},
            {"stable_roots", rs.stable_roots},
            {"ambiguous", rs.ambiguous},
            {"assumptions",
             {{"a1", ar.a1}, {"a2", ar.a2}, {"a3", ar.a3}, {"alpha1", ar.alpha1}, {"g1_at_zero", ar.g1_at_zero},
              {"dg1_at_rest", ar.dg1_at_rest}, {"a3_margin", ar.a3_margin}, {"a4", ar.a4_note}}}};
  ctx.json("rest_state.json", j);
  ctx.check("assumption_a1", ar.a1);
  ctx.check("assumption_a2", ar.a2);
  ctx.check("assumption_a3", ar.a3);
  return verdict(ctx);
}

int cmd_validate(const Config& cfg, RunContext& ctx, const Options&) {
  validate_config(cfg);
  const ModelParams p = cfg.model.params();
  const AssumptionReport ar = validate_assumptions(p, solve_rest_state(p));
  write_text_atomic(ctx.file("config.normalized.cfg"), serialize_config(cfg));
  say(ctx, "config valid; assumptions A1 %d A2 %d A3 %d", ar.a1, ar.a2, ar.a3);
  ctx.check("config", true);
  ctx.check("assumptions", ar.all());
  return verdict(ctx);
}

void write_field(RunContext& ctx, const std::string& name, const Grid& g, const Field& f) {
  auto csv = ctx.csv(name, {"x", "v1", "v2"});
  for (int j = 0; j < g.n_points; ++j) csv.row(std::vector<double>{g.x[j], f[j][0], f[j][1]});
}

int cmd_profile(const Config& cfg, RunContext& ctx, const Options&) {
  Stopwatch sw;
  const BaseWave w = prepare_wave(cfg);
  ctx.timing("solve", sw.lap());
  const WaveProfile& p = w.profile;
  const TailRates& tr = p.tail_rates;
  write_field(ctx, "profile.csv", p.grid, p.v_star);
  write_field(ctx, "kernel.csv", p.grid, p.v_x);
  write_field(ctx, "adjoint.csv", p.grid, w.adjoint.psi2);
  Json j = {{"c", p.c},
            {"omega", p.omega},
            {"v_inf", {p.v_inf[0], p.v_inf[1]}},
            {"residual_norm", p.residual_norm},
            {"iterations", p.iterations},
            {"kernel_residual", w.kernel_residual},
            {"tail_rates",
             {{"left", tr.left}, {"left_pred", tr.left_pred}, {"right", tr.right}, {"right_pred", tr.right_pred},
              {"left_ok", tr.left_ok}, {"right_ok", tr.right_ok}}},
            {"adjoint",
             {{"residual", w.adjoint.residual}, {"normalization", w.adjoint.normalization},
              {"sigma", {w.adjoint.sigma[0], w.adjoint.sigma[1]}}}},
            {"grid", {{"half_width", p.grid.half_width}, {"points", p.grid.n_points}}}};
  ctx.json("profile.json", j);
  say(ctx, "c = %.12f  omega = %.12f  residual %.3e  (%d iterations)", p.c, p.omega, p.residual_norm, p.iterations);
  say(ctx, "kernel residual %.3e", w.kernel_residual);
  say(ctx, "tail rates left %.5f (pred %.5f)  right %.5f (pred %.5f)", tr.left, tr.left_pred, tr.right, tr.right_pred);
  ctx.check("kernel_residual", w.kernel_residual < 1e-4);
  ctx.check("tail_left", tr.left_ok);
  ctx.check("tail_right", tr.right_ok);
  return verdict(ctx);
}

int cmd_dispersion(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const DispersionAnalysis d = analyze_dispersion(w.limits, cfg.spectral);
  auto csv = ctx.csv("curves.csv", {"nu", "re_s", "im_s", "branch", "side"});
  for (const auto& c : d.curves)
    for (size_t i = 0; i < c.s.size(); ++i)
      csv.row(std::vector<std::string>{format_number(c.nu[i]), format_number(c.s[i].real()),
                                       format_number(c.s[i].imag()), std::to_string(c.branch_id),
                                       side_name(c.side)});
  csv.close();
  Json j = {{"critical_branch", d.critical},
            {"closest", d.closest},
            {"kappa_fit", d.tangency.kappa},
            {"kappa_fit_half_radius", d.tangency_half.kappa},
            {"halving_drift", d.halving_drift},
            {"tangency_samples", d.tangency.samples},
            {"tangency_residual", d.tangency.residual},
            {"crescent",
             {{"kappa", d.crescent.kappa}, {"gamma", d.crescent.gamma}, {"rho", d.crescent.rho},
              {"delta", d.crescent.delta}}},
            {"points", d.points},
            {"inside_crescent", d.inside_crescent}};
  ctx.json("dispersion.json", j);
  say(ctx, "critical branch %d, closest |s| %.3e", d.critical, d.closest);
  say(ctx, "kappa_fit %.6f (half radius %.6f, drift %.2e)", d.tangency.kappa, d.tangency_half.kappa, d.halving_drift);
  say(ctx, "crescent kappa %.4f gamma %.4f rho %.4f delta %.4f; %d of %d points inside", d.crescent.kappa,
      d.crescent.gamma, d.crescent.rho, d.crescent.delta, d.inside_crescent, d.points);
  ctx.check("branch_through_origin", d.closest < 1e-10);
  ctx.check("tangency_positive", d.tangency.kappa > 0.0);
  ctx.check("tangency_stable", d.halving_drift < 0.05);
  ctx.check("crescent_clear", d.crescent.valid() && d.inside_crescent == 0);
  return verdict(ctx);
}

int cmd_lambda_branch(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const LambdaAnalysis a = analyze_lambda(w.limits, w.profile.params, cfg.spectral);
  auto csv = ctx.csv("paths.csv", {"a", "min_ratio", "max_ratio"});
  Json paths = Json::array();
  for (const auto& p : a.paths) {
    csv.row(std::vector<double>{p.a, p.min_ratio, p.max_ratio});
    paths.push_back({{"a", p.a}, {"min_ratio", p.min_ratio}, {"max_ratio", p.max_ratio}});
  }
  csv.close();
  Json j = {{"lambda0", cjson(a.derivs.lambda0)}, {"d1", cjson(a.derivs.d1)},
            {"d2", cjson(a.derivs.d2)},           {"q", a.derivs.q},
            {"d2_expected", a.derivs.d2_expected}, {"c", a.c},
            {"d1_error", a.d1_error},              {"d2_error", a.d2_error},
            {"kappa_star", a.kappa_star},          {"paths", paths}};
  ctx.json("lambda.json", j);
  say(ctx, "|lambda(0)| = %.3e", std::abs(a.derivs.lambda0));
  say(ctx, "|lambda'(0) c - 1| = %.3e", a.d1_error);
  say(ctx, "lambda''(0) = %.10f, 2q/c = %.10f (rel %.2e)", a.derivs.d2.real(), a.derivs.d2_expected, a.d2_error);
  say(ctx, "min Re lambda/|lambda|^2 over %zu paths: %.5f", a.paths.size(), a.min_path_ratio);
  ctx.check("lambda0", std::abs(a.derivs.lambda0) < 1e-10);
  ctx.check("first_derivative", a.d1_error < 1e-6);
  ctx.check("second_derivative", a.d2_error < 1e-4);
  ctx.check("paths_positive", a.min_path_ratio > 0.0);
  return verdict(ctx);
}

int cmd_spectrum_probe(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const auto curves = dispersion_curves(w.limits, symmetric_nu_grid(cfg.spectral.nu_max, cfg.spectral.nu_half));
  const PointSpectrumReport r = point_spectrum_probe(w.L, w.limits, curves, cfg.spectral.box, cfg.spectral.probe);
  auto csv = ctx.csv("candidates.csv", {"re_s", "im_s", "residual", "curve_distance", "morse_ok", "kernel",
                                        "artifact", "violation"});
  Json cands = Json::array();
  for (const auto& c : r.candidates) {
    csv.row(std::vector<double>{c.s.real(), c.s.imag(), c.residual, c.curve_distance, double(c.morse_ok),
                                double(c.kernel), double(c.artifact), double(c.violation)});
    cands.push_back({{"s", cjson(c.s)}, {"kernel", c.kernel}, {"artifact", c.artifact}, {"violation", c.violation}});
  }
  csv.close();
  Json j = {{"dim_ker", r.dim_ker},
            {"dim_ker2", r.dim_ker2},
            {"sigma_L", {r.sigma_L[0], r.sigma_L[1]}},
            {"sigma_L2", {r.sigma_L2[0], r.sigma_L2[1]}},
            {"violations", r.violations},
            {"candidates", cands}};
  ctx.json("spectrum.json", j);
  say(ctx, "dim ker L = %d, dim ker L^2 = %d (sigma %.2e %.2e)", r.dim_ker, r.dim_ker2, r.sigma_L[0], r.sigma_L[1]);
  say(ctx, "%zu candidates, %d violations", r.candidates.size(), r.violations);
  ctx.check("simple_kernel", r.dim_ker == 1 && r.dim_ker2 == 1);
  ctx.check("no_unstable_points", r.violations == 0);
  return verdict(ctx);
}

void write_resolvent(RunContext& ctx, const std::string& name, const std::vector<ResolventRow>& rows) {
  auto csv = ctx.csv(name, {"re_s", "im_s", "norm_v", "norm_Pkr", "norm_r_strong"});
  for (const auto& r : rows) csv.row(std::vector<double>{r.s.real(), r.s.imag(), r.norm_v, r.norm_Pkr, r.norm_r_strong});
}

int cmd_resolvent_probe(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const ResolventAnalysis a = analyze_resolvent(w, cfg);
  write_resolvent(ctx, "resolvent_complement.csv", a.complement_rows);
  write_resolvent(ctx, "resolvent_kernel.csv", a.kernel_rows);
  ctx.json("resolvent.json", {{"idempotence", a.idempotence},
                              {"normalization_error", a.normalization_error},
                              {"complement_ratio", a.complement_ratio},
                              {"kernel_slope", a.kernel_slope}});
  say(ctx, "P idempotence %.2e, (psi2, v_x) - 1 = %.2e", a.idempotence, a.normalization_error);
  say(ctx, "P r = 0: max/min |v| = %.4f", a.complement_ratio);
  say(ctx, "r = v_x: slope %.4f", a.kernel_slope);
  ctx.check("idempotent", a.idempotence < 1e-10);
  ctx.check("normalized", a.normalization_error < 1e-10);
  ctx.check("complement_bounded", a.complement_ratio < 2.0);
  ctx.check("kernel_slope", std::abs(a.kernel_slope + 1.0) <= 0.2);
  return verdict(ctx);
}

Json fit_json(const DecayFit& f) {
  return {{"exponent", f.exponent}, {"intercept", f.intercept}, {"t0", f.t0},          {"t1", f.t1},
          {"rms", f.rms},           {"samples", f.samples},     {"below_floor", f.below_floor}};
}

int cmd_evolve(const Config& cfg, RunContext& ctx, const Options&) {
  Stopwatch sw;
  const BaseWave w = prepare_wave(cfg);
  ctx.timing("profile", sw.lap());
  const double shift = cfg.evolution.shift;
  const NonlinearExperiment e = nonlinear_experiment(w, cfg, cfg.evolution.amplitude, shift);
  ctx.timing("evolve", sw.lap());
  auto csv = ctx.csv("timeseries.csv", {"t", "tau", "norm_H1k", "norm_L2k", "valid"});
  for (const auto& s : e.run.states) csv.row(std::vector<double>{s.t, s.tau, s.norm_H1k, s.norm_L2k, double(s.valid)});
  csv.close();
  Json j = {{"amplitude", e.amplitude},   {"shift", shift},
            {"initial_norm", e.initial_norm}, {"steps", e.run.steps},
            {"dt_max", e.run.dt_max},     {"noise_floor", e.floor},
            {"all_valid", e.all_valid},   {"rate_target", e.rate_target},
            {"phase_target", e.phase_target},
            {"phase",
             {{"tau_inf", e.phase.tau_inf}, {"p", e.phase.p}, {"amplitude", e.phase.amplitude},
              {"rms", e.phase.rms}, {"samples", e.phase.samples}, {"settled", e.phase.settled}}}};
  if (shift == 0.0) j["fit"] = fit_json(e.fit);
  ctx.json("evolve.json", j);
  say(ctx, "%zu outputs, decomposition %s", e.run.states.size(), e.all_valid ? "valid throughout" : "LOST");
  say(ctx, "tau_inf %.10g  p %.4f", e.phase.tau_inf, e.phase.p);
  ctx.check("decomposition_valid", e.all_valid);
  if (shift != 0.0) {
    const double err = std::abs(e.phase.tau_inf - shift);
    say(ctx, "shift %.6g recovered with error %.2e", shift, err);
    ctx.check("shift_recovered", err < 1e-6 * std::max(1.0, std::abs(shift)));
  } else {
    say(ctx, "w exponent %.4f (target <= %.3f), floor %.2e", e.fit.exponent, e.rate_target, e.floor);
    ctx.check("w_decay", e.decay_ok());
    ctx.check("phase_settles", e.phase_ok());
  }
  return verdict(ctx);
}

int cmd_linear_decay(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const LinearDecayExperiment e = linear_decay_experiment(w, cfg);
  auto csv = ctx.csv("linear.csv", {"t", "norm_H1k", "norm_L2k", "projection", "kernel_norm_H1k"});
  for (size_t i = 0; i < e.run.t.size(); ++i)
    csv.row(std::vector<double>{e.run.t[i], e.run.norm_H1k[i], e.run.norm_L2k[i], e.run.projection[i],
                                i < e.kernel_run.norm_H1k.size() ? e.kernel_run.norm_H1k[i] : NAN});
  csv.close();
  ctx.json("linear.json", {{"fit", fit_json(e.fit)},
                           {"kernel_fit", fit_json(e.kernel_fit)},
                           {"noise_floor", e.floor},
                           {"target", e.target}});
  say(ctx, "projected data exponent %.4f (target <= %.3f)", e.fit.exponent, e.target);
  say(ctx, "kernel data exponent %.5f", e.kernel_fit.exponent);
  ctx.check("projected_decay", e.fit.exponent <= e.target);
  ctx.check("kernel_flat", std::abs(e.kernel_fit.exponent) <= 0.05);
  return verdict(ctx);
}

Json kernel_json(const KernelReport& r) {
  return {{"check", r.check},
          {"params", {{"k", r.k}, {"q", r.q}}},
          {"sup", r.sup},
          {"argmax", {{"x", r.arg_x}, {"beta", r.arg_beta}}},
          {"bound", r.bound},
          {"pass", r.pass},
          {"display_log10_sup", r.display_sup},
          {"resolution_study",
           {{"sup_refined", r.sup_refined}, {"refinement_drift", r.refinement_drift},
            {"sup_extended", r.sup_extended}, {"range_drift", r.range_drift}}}};
}

int cmd_verify_kernels(const Config& cfg, RunContext& ctx, const Options&) {
  const SweepSpec& s = cfg.verify.sweep;
  std::vector<KernelReport> reports;
  for (double k : {1.0, 2.0, 3.0, 5.0}) reports.push_back(kernel_bound_1(k, 1.0, s, true));
  reports.push_back(kernel_bound_1(3.0, 0.5, s));
  reports.push_back(kernel_bound_1(2.0, 0.0, s));
  for (double q : {0.0, 0.5, 0.9}) reports.push_back(kernel_bound_2(q, s));
  for (double k : {1.0, 2.0, 3.0}) reports.push_back(kernel_bound_3(k, cfg.verify.kernel3_beta0, s));
  Json arr = Json::array();
  for (const auto& r : reports) {
    arr.push_back(kernel_json(r));
    say(ctx, "%-10s k=%-4g q=%-4g sup %-12.6g drift %.1e range %.1e %s", r.check.c_str(), r.k, r.q, r.sup,
        r.refinement_drift, r.range_drift, r.pass ? "pass" : "FAIL");
    std::ostringstream name;
    name << r.check << "_k" << r.k << "_q" << r.q;
    ctx.check(name.str(), r.pass);
  }
  ctx.json("kernels.json", arr);
  return verdict(ctx);
}

int cmd_verify_gronwall(const Config& cfg, RunContext& ctx, const Options& o) {
  const std::vector<double> ps = o.gronwall_p.empty() ? std::vector<double>{1.5, 2.0, 3.0} : o.gronwall_p;
  const auto times = default_gronwall_times();
  Json arr = Json::array();
  for (double p : ps) {
    const GronwallKernelReport g = gronwall_kernel_constant(p, times);
    const double eps = gronwall_eps_threshold(p, cfg.verify.c1, cfg.verify.c2);
    const GronwallIterationReport it =
        gronwall_iteration_check(p, cfg.verify.c1, cfg.verify.c2, eps, cfg.verify.gronwall_t_final, cfg.verify.gronwall_dt);
    const std::string tag = "p" + format_number(p);
    auto csv = ctx.csv("gronwall_" + tag + ".csv", {"t", "integral"});
    for (size_t i = 0; i < g.t.size(); ++i) csv.row(std::vector<double>{g.t[i], g.value[i]});
    csv.close();
    arr.push_back({{"check", "gronwall"},
                   {"params", {{"p", p}, {"c1", cfg.verify.c1}, {"c2", cfg.verify.c2}}},
                   {"sup", g.sup},
                   {"bound", g.c3},
                   {"max_quadrature_error", g.max_error},
                   {"monotone", g.monotone},
                   {"pass", g.pass},
                   {"iteration",
                    {{"eps", it.eps}, {"iterations", it.iterations}, {"converged", it.converged},
                     {"bound_holds", it.bound_holds}, {"worst_ratio", it.worst_ratio}}}});
    say(ctx, "p = %g: sup %.6f  C3 = %.6f  quadrature error %.1e  %s", p, g.sup, g.c3, g.max_error,
        g.pass ? "pass" : "FAIL");
    say(ctx, "        iteration at eps = %.5g: %d steps, worst ratio %.4f  %s", eps, it.iterations, it.worst_ratio,
        it.bound_holds ? "pass" : "FAIL");
    ctx.check("kernel_" + tag, g.pass);
    ctx.check("iteration_" + tag, it.converged && it.bound_holds);
  }
  ctx.json("gronwall.json", arr);
  return verdict(ctx);
}

int cmd_verify_remainders(const Config& cfg, RunContext& ctx, const Options&) {
  const BaseWave w = prepare_wave(cfg);
  const double radius = cfg.verify.ball_radius;
  // Two disjoint sets of pairs, two samples per pair.
  const auto samples = random_remainder_samples(w.profile.grid, 4 * cfg.verify.remainder_pairs, ctx.seed(), radius, radius);
  RemainderOptions opt;
  opt.rates = cfg.rates;
  opt.ball_radius = radius;
  const RemainderReport r = remainder_checks(w.profile, w.adjoint.psi2, samples, opt);
  ctx.json("remainders.json", {{"rf_at_zero", r.rf_at_zero},
                               {"quadratic_ratio", r.quadratic_ratio},
                               {"max_projection_rw", r.max_projection_rw},
                               {"lipschitz_a", r.lipschitz_a},
                               {"lipschitz_b", r.lipschitz_b},
                               {"pairs", r.pairs},
                               {"pass", r.pass}});
  say(ctx, "r_f(0,0) = %g, quadratic ratio %.4f, |P r_w|/|r_w| <= %.2e", r.rf_at_zero, r.quadratic_ratio,
      r.max_projection_rw);
  say(ctx, "Lipschitz constants %.5g / %.5g over %d pairs each", r.lipschitz_a, r.lipschitz_b, r.pairs / 2);
  ctx.check("zero_at_origin", r.rf_at_zero == 0.0);
  ctx.check("quadratic", r.quadratic_ok);
  ctx.check("projection", r.max_projection_rw <= 1e-10);
  ctx.check("lipschitz_stable", r.lipschitz_stable);
  return verdict(ctx);
}

using Handler = std::function<int(const Config&, RunContext&, const Options&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"rest-state", cmd_rest_state},           {"validate", cmd_validate},
      {"profile", cmd_profile},                 {"dispersion", cmd_dispersion},
      {"lambda-branch", cmd_lambda_branch},     {"spectrum-probe", cmd_spectrum_probe},
      {"resolvent-probe", cmd_resolvent_probe}, {"evolve", cmd_evolve},
      {"linear-decay", cmd_linear_decay},       {"verify-kernels", cmd_verify_kernels},
      {"verify-gronwall", cmd_verify_gronwall}, {"verify-remainders", cmd_verify_remainders}};
  return h;
}

// Runs one handler in its own directory and always leaves a manifest behind.
int run_task(const std::string& name, const Config& cfg, const std::filesystem::path& out, const Options& o,
             bool quiet) {
  RunContext ctx(out, name, serialize_config(cfg), o.seed, quiet);
  Stopwatch total;
  int code = kFailed;
  try {
    code = handlers().at(name)(cfg, ctx, o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", name.c_str(), e.what());
    ctx.check("completed", false);
    ctx.set_note("error", e.what());
    code = kFailed;
  }
  ctx.timing("total", total.lap());
  ctx.write_manifest(code);
  return code;
}

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
    throw UsageError("--vary expects section.key=v1,v2,...: '" + spec + "'");
  SweepAxis a;
  a.key = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) a.values.push_back(item);
  if (a.values.empty()) throw UsageError("--vary without values: '" + spec + "'");
  return a;
}

int cmd_sweep(const Config& base, const std::string& config_text, const Options& o, const std::filesystem::path& out) {
  if (!handlers().count(o.task)) throw UsageError("sweep: unknown --task '" + o.task + "'");
  std::vector<SweepAxis> axes;
  for (const auto& v : o.vary) axes.push_back(parse_axis(v));
  std::vector<std::vector<std::string>> cells{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& c : cells)
      for (const auto& v : a.values) {
        auto n = c;
        n.push_back(a.key + "=" + v);
        next.push_back(n);
      }
    cells = std::move(next);
  }
  std::vector<Config> cfgs(cells.size(), base);
  for (size_t i = 0; i < cells.size(); ++i) {
    try {
      for (const auto& s : cells[i]) apply_override(cfgs[i], s);
      validate_config(cfgs[i]);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  auto cell_name = [](size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03zu", i);
    return std::string(buf);
  };
  std::vector<int> codes(cells.size(), kFailed);
  const long long n = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) codes[i] = run_task(o.task, cfgs[i], out / cell_name(i), o, true);

  RunContext ctx(out, "sweep", config_text, o.seed, o.quiet);
  Json index = Json::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    index.push_back({{"cell", cell_name(i)}, {"overrides", cells[i]}, {"exit_code", codes[i]}, {"pass", codes[i] == kOk}});
    ctx.file(cell_name(i) + "/manifest.json");
    ctx.check(cell_name(i), codes[i] == kOk);
    say(ctx, "%s %-40s %s", cell_name(i).c_str(), Json(cells[i]).dump().c_str(), codes[i] == kOk ? "pass" : "FAIL");
  }
  ctx.json("index.json", {{"task", o.task}, {"cells", index}});
  const int code = verdict(ctx);
  ctx.write_manifest(code);
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int thread_request(const Options& o) {
  if (o.threads > 0) return o.threads;
  if (const char* env = std::getenv("TOFWAVE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for front-type modulated waves of the quintic complex Ginzburg-Landau equation", "tofwave"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "configuration file (defaults apply when omitted)");
  app.add_option("--out", o.out_dir, "output directory (default runs/<subcommand>)");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--threads", o.threads, "OpenMP threads (fallback: TOFWAVE_THREADS)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", o.quiet, "suppress console output");
  app.add_option("--set", o.overrides, "override section.key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"rest-state", "rest state, rotation frequency and assumption margins"},
      {"validate", "check configuration and assumptions"},
      {"profile", "solve for the wave profile and its kernel/adjoint vectors"},
      {"dispersion", "dispersion curves, tangency fit and crescent"},
      {"lambda-branch", "critical spatial eigenvalue near s = 0"},
      {"spectrum-probe", "shifted inverse iteration for point spectrum"},
      {"resolvent-probe", "resolvent growth near s = 0"},
      {"evolve", "nonlinear run with phase/remainder decomposition"},
      {"linear-decay", "linear semigroup decay on weighted spaces"},
      {"verify-kernels", "quadrature sweeps of the weighted kernel bounds"},
      {"verify-gronwall", "algebraic Gronwall constant and iteration"},
      {"verify-remainders", "nonlinear remainder estimates on random samples"},
      {"sweep", "cartesian product of overrides over one task"}};
  std::map<std::string, CLI::App*> cmds;
  for (const auto& [name, help] : subs) cmds[name] = app.add_subcommand(name, help);
  cmds["verify-gronwall"]->add_option("--p", o.gronwall_p, "exponents p > 1 (default 1.5 2 3)");
  cmds["sweep"]->add_option("--task", o.task, "subcommand run in every cell")->required();
  cmds["sweep"]->add_option("--vary", o.vary, "section.key=v1,v2,... (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  std::string name;
  for (auto* s : app.get_subcommands()) name = s->get_name();
  if (const int n = thread_request(o)) set_thread_count(n);

  Config cfg;
  std::string config_text;
  try {
    if (!o.config_path.empty()) cfg = parse_config(read_file(o.config_path));
    for (const auto& s : o.overrides) apply_override(cfg, s);
    validate_config(cfg);
    config_text = serialize_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "tofwave: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  const std::filesystem::path out = o.out_dir.empty() ? std::filesystem::path("runs") / name : std::filesystem::path(o.out_dir);

  try {
    if (name == "sweep") return cmd_sweep(cfg, config_text, o, out);
    return run_task(name, cfg, out, o, o.quiet);
  } catch (const UsageError& e) {
    std::cerr << "tofwave: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "tofwave: " << e.what() << "\n";
    return kFailed;
  }
}
