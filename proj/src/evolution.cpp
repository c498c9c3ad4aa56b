#include "tofwave/evolution.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "tofwave/errors.hpp"

namespace tofwave {

Scheme parse_scheme(const std::string& s) {
  if (s == "IMEX1" || s == "imex1") return Scheme::IMEX1;
  if (s == "IMEX2" || s == "imex2") return Scheme::IMEX2;
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + s + "'");
}

const char* scheme_name(Scheme s) { return s == Scheme::IMEX1 ? "IMEX1" : "IMEX2"; }

ShiftMethod parse_shift_method(const std::string& s) {
  if (s == "resolve") return ShiftMethod::Resolve;
  if (s == "cubic") return ShiftMethod::Cubic;
  throw Error(ErrorCode::InvalidArgument, "unknown shift method '" + s + "'");
}

const char* shift_method_name(ShiftMethod m) { return m == ShiftMethod::Resolve ? "resolve" : "cubic"; }

double preflight_dt_max(const WaveProfile& p) {
  double m = 0.0;
  for (const auto& b : reaction_blocks(p)) {
    Eigen::JacobiSVD<Mat2> svd(b);
    m = std::max(m, svd.singularValues()(0));
  }
  return m > 0.0 ? 1.8 / m : INFINITY;
}

namespace {
constexpr double kGamma = 1.0 - 0.70710678118654752440;  // 1 - 1/sqrt(2)
constexpr double kDelta = 1.0 - 1.0 / (2.0 * kGamma);
}  // namespace

NonlinearStepper::NonlinearStepper(const ModelParams& params, const Grid& grid, double c, double omega,
                                   Field base, double dt, Scheme scheme, Exec exec)
    : params_(params), grid_(grid), base_(std::move(base)), dt_(dt), scheme_(scheme), exec_(exec) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (static_cast<int>(base_.size()) != grid_.n_points)
    throw Error(ErrorCode::DimensionMismatch, "base field size");
  Mat2 S;
  S << 0.0, -omega, omega, 0.0;
  L0_ = assemble_operator(grid_, params_.A(), c, std::vector<Mat2>(grid_.n_points, S));
  const double theta = scheme_ == Scheme::IMEX1 ? 1.0 : kGamma;
  const int n = L0_.matrix.size();
  BandedMatrix<double> M(n, 3, 3);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j)
      M.at(i, j) = (i == j ? 1.0 : 0.0) - theta * dt_ * L0_.matrix.at(i, j);
  lu_ = BandedLU<double>(std::move(M));
  if (!lu_.ok()) throw Error(ErrorCode::SolveFailed, "implicit operator factorization");
}

NonlinearStepper NonlinearStepper::for_profile(const WaveProfile& p, double dt, Scheme scheme, Exec exec) {
  return NonlinearStepper(p.params, p.grid, p.c, p.omega, p.v_star, dt, scheme, exec);
}

void NonlinearStepper::explicit_term(const Field& u, Field& out) const {
  out.resize(u.size());
  kernels::nonlinear_difference(params_, base_.data(), u.data(), out.data(), u.size(), exec_);
  out.front().setZero();
  out.back().setZero();
}

void NonlinearStepper::implicit_solve(std::vector<double>& rhs) const { lu_.solve_in_place(rhs); }

void NonlinearStepper::step(Field& u) {
  const int n = grid_.n_points;
  if (static_cast<int>(u.size()) != n) throw Error(ErrorCode::DimensionMismatch, "state size");
  Field K0;
  explicit_term(u, K0);
  if (scheme_ == Scheme::IMEX1) {
    Field r(n);
    for (int j = 0; j < n; ++j) r[j] = u[j] + dt_ * K0[j];
    auto rhs = to_interior(r);
    implicit_solve(rhs);
    u = from_interior(rhs, n);
    return;
  }
  Field r(n);
  for (int j = 0; j < n; ++j) r[j] = u[j] + (kGamma * dt_) * K0[j];
  auto rhs = to_interior(r);
  implicit_solve(rhs);
  const Field U1 = from_interior(rhs, n);
  Field K1;
  explicit_term(U1, K1);
  const Field LU1 = L0_.apply(U1);
  for (int j = 0; j < n; ++j)
    r[j] = u[j] + dt_ * ((1.0 - kGamma) * LU1[j] + kDelta * K0[j] + (1.0 - kDelta) * K1[j]);
  rhs = to_interior(r);
  implicit_solve(rhs);
  u = from_interior(rhs, n);
}

Field NonlinearStepper::step_full(const Field& v) {
  Field u(v.size());
  for (size_t j = 0; j < v.size(); ++j) u[j] = v[j] - base_[j];
  step(u);
  for (size_t j = 0; j < v.size(); ++j) u[j] += base_[j];
  return u;
}

// ---------------------------------------------------------------------------

Decomposer::Decomposer(const WaveProfile& base, const Field& psi2, ShiftMethod method)
    : base_(base), psi_(psi2), method_(method) {}

namespace {

// Sample of dev/limit pairs outside the grid continues the far-field limits.
struct SplitSampler {
  const WaveProfile& p;
  Vec2 dev(int k) const { return (k < 0 || k >= p.grid.n_points) ? Vec2::Zero() : p.dev[k]; }
  Vec2 lim(int k) const { return k < 0 ? Vec2::Zero() : (k >= p.grid.n_points ? p.v_inf : p.limit(k)); }
  Vec2 vx(int k) const { return (k < 0 || k >= p.grid.n_points) ? Vec2::Zero() : p.v_x[k]; }
};

std::array<double, 4> cubic_weights(double s) {
  return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
          -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

}  // namespace

void Decomposer::ensure(double tau) {
  if (cached_ && tau == cached_tau_) return;
  const int n = base_.grid.n_points;
  cached_diff_.assign(n, Vec2::Zero());
  cached_vx_ = base_.v_x;
  if (tau == 0.0) {
    cached_ = base_;
    cached_tau_ = tau;
    return;
  }
  if (method_ == ShiftMethod::Resolve) {
    const WaveProfile& warm = cached_ ? *cached_ : base_;
    cached_ = resolve_shifted(warm, tau);
    for (int j = 0; j < n; ++j)
      cached_diff_[j] = cached_->dev[j] - base_.dev[j] + cached_->limit(j) - base_.limit(j);
    cached_vx_ = cached_->v_x;
  } else {
    const SplitSampler S{base_};
    const Grid& g = base_.grid;
    for (int j = 0; j < n; ++j) {
      const double pos = (g.x[j] - tau + g.half_width) / g.h;
      const int i = static_cast<int>(std::floor(pos));
      const auto w = cubic_weights(pos - i);
      Vec2 acc = Vec2::Zero(), dx = Vec2::Zero();
      for (int k = 0; k < 4; ++k) {
        const int node = i - 1 + k;
        acc += w[k] * (S.dev(node) + S.lim(node) - S.lim(j));
        dx += w[k] * S.vx(node);
      }
      cached_diff_[j] = acc - base_.dev[j];
      cached_vx_[j] = dx;
    }
    cached_diff_.front().setZero();
    cached_diff_.back().setZero();
    cached_ = base_;
  }
  cached_tau_ = tau;
}

Field Decomposer::shift_difference(double tau) {
  ensure(tau);
  return cached_diff_;
}

Field Decomposer::shifted_derivative(double tau) {
  ensure(tau);
  return cached_vx_;
}

Field Decomposer::shifted_profile(double tau) {
  ensure(tau);
  Field v(base_.v_star);
  for (size_t j = 0; j < v.size(); ++j) v[j] += cached_diff_[j];
  return v;
}

DecompositionResult Decomposer::decompose_perturbation(const Field& u, double tau_guess) {
  const Grid& g = base_.grid;
  if (static_cast<int>(u.size()) != g.n_points) throw Error(ErrorCode::DimensionMismatch, "state size");
  const double rhs = l2_inner(psi_, u, g);
  const double h0 = l2_inner(psi_, base_.v_x, g);
  double tau = tau_guess;
  DecompositionResult res;
  bool done = false;
  for (int it = 0; it < 50; ++it) {
    ensure(tau);
    const double h = l2_inner(psi_, cached_diff_, g);
    const double hp = -l2_inner(psi_, cached_vx_, g);
    if (std::abs(hp) < 1e-8 * std::abs(h0))
      throw Error(ErrorCode::DerivativeDegenerate, "(psi2, v_x(. - tau)) vanishes");
    const double step = (h - rhs) / hp;
    res.iterations = it;
    if (std::abs(step) <= 1e-13 * (1.0 + std::abs(tau))) {
      done = true;
      break;
    }
    tau -= step;
    if (!std::isfinite(tau)) break;
  }
  if (!done) throw Error(ErrorCode::NewtonFailed, "phase equation did not converge");
  res.tau = tau;
  res.w.resize(u.size());
  for (size_t j = 0; j < u.size(); ++j) res.w[j] = u[j] - cached_diff_[j];
  const double nw = weighted_norm(res.w, {0.0, 0}, g);
  res.orthogonality = nw > 0.0 ? std::abs(l2_inner(psi_, res.w, g)) / nw : 0.0;
  return res;
}

DecompositionResult Decomposer::decompose(const Field& v, double tau_guess) {
  Field u(v.size());
  for (size_t j = 0; j < v.size(); ++j) u[j] = v[j] - base_.v_star[j];
  return decompose_perturbation(u, tau_guess);
}

// ---------------------------------------------------------------------------

NonlinearRun evolve_nonlinear(const Field& u0, const SimulationConfig& cfg, const WaveProfile& p,
                              const Field& psi2) {
  NonlinearRun run;
  run.dt_max = preflight_dt_max(p);
  if (cfg.dt > run.dt_max)
    throw Error(ErrorCode::InvalidArgument, "dt exceeds preflight bound " + std::to_string(run.dt_max));
  if (cfg.output_stride < 1) throw Error(ErrorCode::InvalidArgument, "output_stride must be >= 1");
  NonlinearStepper stepper = NonlinearStepper::for_profile(p, cfg.dt, cfg.scheme, cfg.exec);
  Decomposer dec(p, psi2, cfg.shift_method);
  Field u = u0;
  u.front().setZero();
  u.back().setZero();
  const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
  double tau = 0.0;
  int failures = 0;
  const double k = cfg.rates.k;
  auto record = [&](int n) {
    if (!std::isfinite(kernels::max_norm(u.data(), u.size(), cfg.exec)))
      throw Error(ErrorCode::NonFiniteState, "state blew up at t = " + std::to_string(n * cfg.dt));
    DecompositionState st;
    st.t = n * cfg.dt;
    try {
      auto r = dec.decompose_perturbation(u, tau);
      tau = r.tau;
      st.tau = r.tau;
      st.newton_iters = r.iterations;
      st.orthogonality = r.orthogonality;
      st.norm_H1k = weighted_norm(r.w, {k, 1}, p.grid, cfg.exec);
      st.norm_L2k = weighted_norm(r.w, {k, 0}, p.grid, cfg.exec);
      if (cfg.keep_fields || n == steps) st.w = std::move(r.w);
      failures = 0;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteField) throw Error(ErrorCode::NonFiniteState, e.what());
      st.valid = false;
      st.tau = tau;
      if (++failures >= 3) throw Error(ErrorCode::DecompositionLost, e.what());
    }
    run.states.push_back(std::move(st));
  };
  record(0);
  for (int n = 1; n <= steps; ++n) {
    stepper.step(u);
    if (n % cfg.output_stride == 0 || n == steps) record(n);
  }
  run.steps = steps;
  return run;
}

LinearRun evolve_linear(const Field& w0, const SimulationConfig& cfg, const DiscreteOperator& L,
                        const Field* psi2, const Field* v_x) {
  const Grid& g = L.grid;
  const int n = L.matrix.size();
  if (static_cast<int>(w0.size()) != g.n_points) throw Error(ErrorCode::DimensionMismatch, "state size");
  auto shifted = [&](double diag, double scale) {
    BandedMatrix<double> M(n, 3, 3);
    for (int i = 0; i < n; ++i)
      for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j)
        M.at(i, j) = (i == j ? diag : 0.0) - scale * L.matrix.at(i, j);
    BandedLU<double> lu(std::move(M));
    if (!lu.ok()) throw Error(ErrorCode::SolveFailed, "implicit linear operator");
    return lu;
  };
  const BandedLU<double> be = shifted(1.0, cfg.dt);
  const BandedLU<double> bdf = cfg.scheme == Scheme::IMEX2 ? shifted(3.0, 2.0 * cfg.dt) : BandedLU<double>();
  const bool reproject = psi2 && v_x;
  std::vector<double> psi_i, vx_i;
  if (reproject) {
    psi_i = to_interior(*psi2);
    vx_i = to_interior(*v_x);
  }
  auto project = [&](std::vector<double>& w) {
    if (!reproject) return;
    double a = 0.0;
    for (int i = 0; i < n; ++i) a += psi_i[i] * w[i];
    a *= g.h;
    for (int i = 0; i < n; ++i) w[i] -= a * vx_i[i];
  };
  LinearRun run;
  const double k = cfg.rates.k;
  auto record = [&](int step, const std::vector<double>& w) {
    const Field f = from_interior(w, g.n_points);
    for (const auto& e : w)
      if (!std::isfinite(e)) throw Error(ErrorCode::NonFiniteState, "linear evolution blew up");
    run.t.push_back(step * cfg.dt);
    run.norm_H1k.push_back(weighted_norm(f, {k, 1}, g, cfg.exec));
    run.norm_L2k.push_back(weighted_norm(f, {k, 0}, g, cfg.exec));
    run.projection.push_back(psi2 ? l2_inner(*psi2, f, g, cfg.exec) : 0.0);
  };
  std::vector<double> w = to_interior(w0), prev;
  record(0, w);
  const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
  for (int s = 1; s <= steps; ++s) {
    if (cfg.scheme == Scheme::IMEX1 || s == 1) {
      prev = w;
      be.solve_in_place(w);
    } else {
      std::vector<double> rhs(n);
      for (int i = 0; i < n; ++i) rhs[i] = 4.0 * w[i] - prev[i];
      bdf.solve_in_place(rhs);
      prev.swap(w);
      w.swap(rhs);
    }
    project(w);
    if (s % cfg.output_stride == 0 || s == steps) record(s, w);
  }
  run.final_state = from_interior(w, g.n_points);
  return run;
}

// ---------------------------------------------------------------------------

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t0, double t1,
                   double floor) {
  if (t.size() != value.size()) throw Error(ErrorCode::DimensionMismatch, "series lengths differ");
  std::vector<double> X, Y;
  int below = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    if (!(value[i] > 0.0)) throw Error(ErrorCode::NonPositiveValues, "non-positive value in window");
    if (value[i] <= floor) {
      ++below;
      continue;
    }
    X.push_back(std::log1p(t[i]));
    Y.push_back(std::log(value[i]));
  }
  if (X.size() < 3) throw Error(ErrorCode::EmptyWindow, "fewer than 3 samples in the fit window");
  const double n = static_cast<double>(X.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < X.size(); ++i) { mx += X[i]; my += Y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::EmptyWindow, "degenerate fit window");
  DecayFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double sse = 0.0;
  for (size_t i = 0; i < X.size(); ++i) {
    const double e = Y[i] - f.intercept - f.exponent * X[i];
    sse += e * e;
  }
  f.rms = std::sqrt(sse / n);
  f.stderr_exponent = X.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  f.samples = static_cast<int>(X.size());
  f.below_floor = below;
  f.t0 = t0;
  f.t1 = t1;
  return f;
}

double detect_noise_floor(const std::vector<double>& value) {
  if (value.size() < 8) return 0.0;
  const size_t start = value.size() - value.size() / 4;
  double lo = value[start], hi = value[start];
  for (size_t i = start; i < value.size(); ++i) {
    lo = std::min(lo, value[i]);
    hi = std::max(hi, value[i]);
  }
  return (lo > 0.0 && hi <= 1.01 * lo) ? hi : 0.0;
}

std::pair<double, double> default_fit_window(const WaveProfile& p, double t_final, double t0) {
  const double front = p.options.template_center;
  const double t_reflect = (p.grid.half_width - front) / std::max(p.c, 1e-12);
  return {t0, std::min(t_final, 0.8 * t_reflect)};
}

PhaseFit asymptotic_phase(const std::vector<double>& t, const std::vector<double>& tau, double p0,
                          double t_start) {
  if (t.size() != tau.size() || t.empty()) throw Error(ErrorCode::DimensionMismatch, "tau series");
  PhaseFit out;
  const double last = tau.back();
  double tv = 0.0;
  for (size_t i = 1; i < tau.size(); ++i) tv += std::abs(tau[i] - tau[i - 1]);
  const size_t decile = std::max<size_t>(1, tau.size() / 10);
  double tail_var = 0.0;
  for (size_t i = tau.size() - decile; i < tau.size(); ++i)
    if (i > 0) tail_var += std::abs(tau[i] - tau[i - 1]);
  if (tv == 0.0) {
    out.tau_inf = last;
    out.p = p0;
    out.settled = true;
    return out;
  }
  if (tail_var > 0.25 * tv) throw Error(ErrorCode::TailNotSettled, "tau still moving in the last decile");

  std::vector<double> ts, ys;
  const double floor = 1e-12 * std::max(1.0, std::abs(last));
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start) continue;
    if (i + 1 < t.size() && std::abs(tau[i] - last) < floor) continue;
    ts.push_back(t[i]);
    ys.push_back(tau[i]);
  }
  out.samples = static_cast<int>(ts.size());
  if (ts.size() < 3) {
    out.tau_inf = last;
    out.p = p0;
    out.settled = true;
    return out;
  }
  // For fixed p the model tau_inf - a (1+t)^{-p} is linear in (tau_inf, a).
  auto solve_linear = [&](double p, double& tinf, double& a) {
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
      const double z = -std::pow(1.0 + ts[i], -p);
      s11 += 1.0;
      s12 += z;
      s22 += z * z;
      b1 += ys[i];
      b2 += z * ys[i];
    }
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) {
      tinf = b1 / s11;
      a = 0.0;
    } else {
      tinf = (s22 * b1 - s12 * b2) / det;
      a = (s11 * b2 - s12 * b1) / det;
    }
    double sse = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      const double e = ys[i] - (tinf - a * std::pow(1.0 + ts[i], -p));
      sse += e * e;
    }
    return sse;
  };
  auto objective = [&](double logp) {
    double tinf, a;
    return solve_linear(std::exp(logp), tinf, a);
  };
  const auto best = boost::math::tools::brent_find_minima(objective, std::log(0.01), std::log(20.0), 52);
  out.p = std::exp(best.first);
  double tinf, a;
  const double sse = solve_linear(out.p, tinf, a);
  out.tau_inf = tinf;
  out.amplitude = a;
  out.rms = std::sqrt(sse / ts.size());
  out.settled = true;
  return out;
}

}  // namespace tofwave
