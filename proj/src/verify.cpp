#include "tofwave/verify.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <set>

#include "tofwave/errors.hpp"
#include "tofwave/spectral.hpp"

namespace tofwave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelTol = 1e-10;
constexpr double kAcceptRel = 1e-6;
constexpr int kMaxDepth = 15;

double log_eta(double x) { return 0.5 * std::log1p(x * x); }

template <class F>
double gk(F&& f, double a, double b, int points, double* err_out = nullptr, double* l1_out = nullptr) {
  double err = 0.0, l1 = 0.0, v = 0.0;
  if (std::isinf(b)) {
    boost::math::quadrature::exp_sinh<double> tail;
    v = tail.integrate(f, a, b, kRelTol, &err, &l1);
  } else if (points == 31)
    v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kMaxDepth, kRelTol, &err, &l1);
  else if (points == 15)
    v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kMaxDepth, kRelTol, &err, &l1);
  else
    throw Error(ErrorCode::InvalidArgument, "Gauss-Kronrod order must be 15 or 31");
  if (err_out) *err_out = err;
  if (l1_out) *l1_out = l1;
  return v;
}

// Sum of adaptive pieces between consecutive breaks; the last break may be infinite.
template <class F>
double integrate_pieces(F&& f, const std::vector<double>& breaks, int points, const char* what,
                        double x, double beta) {
  double total = 0.0, err = 0.0, l1 = 0.0;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    double e = 0.0, a = 0.0;
    total += gk(f, breaks[i], breaks[i + 1], points, &e, &a);
    err += e;
    l1 += a;
  }
  if (!std::isfinite(total) || err > kAcceptRel * l1 + 1e-300)
    throw Error(ErrorCode::QuadratureNotConverged,
                std::string(what) + " at x = " + std::to_string(x) + ", beta = " + std::to_string(beta) +
                    ": relative error estimate " + std::to_string(err / std::max(l1, 1e-300)));
  return total;
}

// Geometric breaks refining towards both ends of [0, X].
std::vector<double> two_sided_breaks(double X, double first) {
  std::set<double> pts{0.0, X};
  for (double d = first; d < X; d *= 2.0) {
    pts.insert(d);
    pts.insert(X - d);
  }
  return {pts.begin(), pts.end()};
}

std::vector<double> one_sided_breaks(double first, double last, bool to_infinity) {
  std::vector<double> b{0.0};
  for (double d = first; d < last; d *= 2.0) b.push_back(d);
  b.push_back(last);
  if (to_infinity) b.push_back(kInf);
  return b;
}

std::vector<double> log_samples(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return out;
}

struct SupResult {
  double sup = 0.0, x = 0.0, beta = 0.0;
};

template <class F>
SupResult sweep_sup(const std::vector<double>& xs, const std::vector<double>& betas, F&& value,
                    Exec exec) {
  const int nx = static_cast<int>(xs.size()), nb = static_cast<int>(betas.size());
  std::vector<double> vals(static_cast<size_t>(nx) * nb, 0.0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int idx = 0; idx < nx * nb; ++idx) {
    try {
      vals[idx] = value(xs[idx / nb], betas[idx % nb]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  SupResult r;
  r.sup = -kInf;
  for (int idx = 0; idx < nx * nb; ++idx)
    if (vals[idx] > r.sup) {
      r.sup = vals[idx];
      r.x = xs[idx / nb];
      r.beta = betas[idx % nb];
    }
  return r;
}

double drift(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

void SweepSpec::validate() const {
  if (x_points < 1 || beta_points < 1) throw Error(ErrorCode::InvalidArgument, "empty sweep range");
  if (x_hi_exp < x_lo_exp || beta_hi_exp < beta_lo_exp)
    throw Error(ErrorCode::InvalidArgument, "sweep range reversed");
  if (gk_points != 15 && gk_points != 31)
    throw Error(ErrorCode::InvalidArgument, "gk_points must be 15 or 31");
}

std::vector<double> SweepSpec::x_samples() const {
  std::vector<double> xs;
  if (include_x_zero) xs.push_back(0.0);
  for (double x : log_samples(x_lo_exp, x_hi_exp, x_points)) xs.push_back(x);
  if (x_extend_factor > 1.0) {
    // same spacing continued, then the new endpoint
    const double step = x_points > 1 ? (x_hi_exp - x_lo_exp) / (x_points - 1) : 0.25;
    const double top = x_hi_exp + std::log10(x_extend_factor);
    for (double e = x_hi_exp + step; e < top; e += step) xs.push_back(std::pow(10.0, e));
    xs.push_back(std::pow(10.0, top));
  }
  return xs;
}

std::vector<double> SweepSpec::beta_samples() const {
  std::vector<double> bs;
  for (double b : log_samples(beta_lo_exp, beta_hi_exp, beta_points))
    if (beta_max <= 0.0 || b <= beta_max * (1.0 + 1e-12)) bs.push_back(b);
  if (bs.empty()) throw Error(ErrorCode::InvalidArgument, "beta range empty after clipping");
  return bs;
}

SweepSpec SweepSpec::refined() const {
  SweepSpec s = *this;
  s.gk_points = 31;
  return s;
}

SweepSpec SweepSpec::extended_x() const {
  SweepSpec s = *this;
  s.x_extend_factor = 2.0;
  return s;
}

double kernel1_integral(double x, double beta, double k, double q, int gk_points) {
  if (x < 0.0 || beta < 0.0) throw Error(ErrorCode::InvalidArgument, "kernel 1 needs x, beta >= 0");
  if (beta == 0.0 && k + q <= 1.0) throw Error(ErrorCode::InvalidArgument, "kernel 1 diverges at beta = 0");
  const double ex2 = 1.0 + x * x;
  // substitute y = x + s; log(eta(y)^2 / eta(x)^2) = log1p(s (2x + s) / eta(x)^2)
  auto f = [&](double s) {
    return std::exp(-0.5 * k * std::log1p(s * (2.0 * x + s) / ex2) - q * log_eta(x + s) - beta * s);
  };
  const double scale = beta > 0.0 ? std::min(1.0 + x, 1.0 / beta) : 1.0 + x;
  const double cutoff = beta > 0.0 ? 60.0 / beta : 0.0;
  const double algebraic_end = 1e3 * (1.0 + x);
  std::vector<double> breaks;
  if (beta > 0.0 && cutoff <= algebraic_end)
    breaks = one_sided_breaks(scale / 8.0, cutoff, false);  // remainder below e^{-60}
  else
    breaks = one_sided_breaks(scale / 8.0, algebraic_end, true);
  return integrate_pieces(f, breaks, gk_points, "kernel 1", x, beta);
}

double kernel2_integral(double x, double beta, double q, int gk_points) {
  if (x < 0.0 || beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "kernel 2 needs x >= 0, beta > 0");
  if (x == 0.0) return 0.0;
  // substitute y = x - s
  auto f = [&](double s) { return std::exp(-q * log_eta(x - s) - beta * s); };
  const double end = std::min(x, 60.0 / beta);
  return integrate_pieces(f, two_sided_breaks(end, std::min(1.0, 1.0 / beta) / 8.0), gk_points, "kernel 2", x, beta);
}

double kernel2_display_integral(double x, double beta, double q, int gk_points) {
  if (x < 0.0 || beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "kernel 2 needs x >= 0, beta > 0");
  if (x == 0.0) return 0.0;
  // e^{beta x} int_0^x eta^{-q}(y) e^{-beta y} dy, returned as a log to survive overflow
  auto f = [&](double y) { return std::exp(-q * log_eta(y) - beta * y); };
  const double end = std::min(x, 60.0 / beta);
  const double inner = integrate_pieces(f, two_sided_breaks(end, std::min(1.0, 1.0 / beta) / 8.0), gk_points, "kernel 2 display", x, beta);
  return beta * x + std::log(inner);
}

double kernel3_integral(double x, double beta, double k, int gk_points) {
  if (x < 0.0 || beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "kernel 3 needs x >= 0, beta > 0");
  if (x == 0.0) return 0.0;
  const double ex2 = 1.0 + x * x;
  // log(eta(x)^2 / eta(x - s)^2), each branch free of cancellation
  auto log_ratio = [&](double s) {
    if (s <= 0.5 * x) return -std::log1p(-s * (2.0 * x - s) / ex2);
    return std::log1p(x * x) - std::log1p((x - s) * (x - s));
  };
  auto f = [&](double s) { return std::exp(0.5 * k * log_ratio(s) - beta * s); };
  return integrate_pieces(f, two_sided_breaks(x, std::min(1.0, 1.0 / beta) / 8.0), gk_points, "kernel 3", x, beta);
}

double kernel3_penalty(double beta, double k) {
  if (k > 1.0) return std::pow(beta, -k);
  if (beta < 1.0) return std::abs(std::log(beta)) / beta;
  return 1.0 / beta;
}

double kernel1_explicit_constant(double k) { return std::pow(2.0, 0.5 * (k + 1.0)) / k; }

namespace {

template <class F>
void fill_report(KernelReport& r, const SweepSpec& sweep, F&& normalized, Exec exec) {
  sweep.validate();
  const SupResult base = sweep_sup(sweep.x_samples(), sweep.beta_samples(),
                                   [&](double x, double b) { return normalized(x, b, sweep.gk_points); }, exec);
  const SweepSpec fine = sweep.refined();
  const SupResult refined = sweep_sup(fine.x_samples(), fine.beta_samples(),
                                      [&](double x, double b) { return normalized(x, b, 31); }, exec);
  const SweepSpec wide = sweep.extended_x();
  const SupResult extended = sweep_sup(wide.x_samples(), wide.beta_samples(),
                                       [&](double x, double b) { return normalized(x, b, sweep.gk_points); }, exec);
  r.sup = base.sup;
  r.arg_x = base.x;
  r.arg_beta = base.beta;
  r.sup_refined = refined.sup;
  r.sup_extended = extended.sup;
  r.refinement_drift = drift(base.sup, refined.sup);
  r.range_drift = drift(base.sup, extended.sup);
  r.pass = std::isfinite(r.sup) && r.refinement_drift < 0.01;
}

}  // namespace

KernelReport kernel_bound_1(double k, double q, const SweepSpec& sweep, bool zero_beta, Exec exec) {
  if (k < 0.0 || q < 0.0 || q > 1.0 || (k == 0.0 && q == 1.0))
    throw Error(ErrorCode::InvalidArgument, "kernel 1 needs k >= 0, 0 <= q <= 1, not (k = 0, q = 1)");
  if (zero_beta && q != 1.0) throw Error(ErrorCode::InvalidArgument, "beta = 0 requires q = 1");
  KernelReport r;
  r.check = zero_beta ? "kernel1_beta0" : "kernel1";
  r.k = k;
  r.q = q;
  SweepSpec s = sweep;
  if (zero_beta) {
    s.beta_points = 1;
    s.beta_lo_exp = s.beta_hi_exp = 0.0;
  }
  fill_report(r, s, [&](double x, double b, int pts) {
    if (zero_beta) return kernel1_integral(x, 0.0, k, q, pts);
    return kernel1_integral(x, b, k, q, pts) * std::pow(b, 1.0 - q);
  }, exec);
  if (zero_beta) {
    r.arg_beta = 0.0;
    r.bound = kernel1_explicit_constant(k);
    r.pass = r.pass && r.sup <= r.bound + 1e-6;
  }
  return r;
}

KernelReport kernel_bound_2(double q, const SweepSpec& sweep, Exec exec) {
  if (q < 0.0 || q >= 1.0) throw Error(ErrorCode::InvalidArgument, "kernel 2 needs 0 <= q < 1");
  KernelReport r;
  r.check = "kernel2";
  r.q = q;
  fill_report(r, sweep, [&](double x, double b, int pts) {
    return kernel2_integral(x, b, q, pts) * std::pow(b, 1.0 - q);
  }, exec);
  const SupResult disp = sweep_sup(sweep.x_samples(), sweep.beta_samples(), [&](double x, double b) {
    if (x == 0.0) return -kInf;
    return (kernel2_display_integral(x, b, q, sweep.gk_points) + (1.0 - q) * std::log(b)) / std::log(10.0);
  }, exec);
  r.display_sup = disp.sup;  // log10 of the normalized display-form supremum
  return r;
}

KernelReport kernel_bound_3(double k, double beta0, const SweepSpec& sweep, Exec exec) {
  if (k < 1.0 || beta0 <= 0.0) throw Error(ErrorCode::InvalidArgument, "kernel 3 needs k >= 1, beta0 > 0");
  KernelReport r;
  r.check = "kernel3";
  r.k = k;
  SweepSpec s = sweep;
  s.beta_max = beta0;
  fill_report(r, s, [&](double x, double b, int pts) {
    return kernel3_integral(x, b, k, pts) / kernel3_penalty(b, k);
  }, exec);
  return r;
}

double gronwall_c3(double p) {
  if (p <= 1.0) throw Error(ErrorCode::InvalidArgument, "Gronwall constant needs p > 1");
  return std::pow(2.0, p - 1.0) * p / (p - 1.0);
}

double gronwall_integral(double t, double p, double* error_estimate) {
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "negative time");
  if (error_estimate) *error_estimate = 0.0;
  if (t == 0.0) return 0.0;
  auto f = [&](double s) {
    return std::exp((p - 1.0) * (std::log1p(t) - std::log1p(s)) - p * std::log1p(t - s));
  };
  const double half = 0.5 * t;
  double total = 0.0, err = 0.0, l1 = 0.0;
  // features of width 1 at both ends
  for (const auto& piece : {std::pair{0.0, half}, std::pair{half, t}}) {
    std::vector<double> br;
    const double len = piece.second - piece.first;
    for (double b : two_sided_breaks(len, std::min(0.25, len / 4.0))) br.push_back(piece.first + b);
    for (size_t i = 0; i + 1 < br.size(); ++i) {
      double e = 0.0, a = 0.0;
      total += gk(f, br[i], br[i + 1], 31, &e, &a);
      err += e;
      l1 += a;
    }
  }
  if (!std::isfinite(total) || err > kAcceptRel * l1 + 1e-300)
    throw Error(ErrorCode::QuadratureNotConverged, "Gronwall kernel at t = " + std::to_string(t));
  if (error_estimate) *error_estimate = err;
  return total;
}

std::vector<double> default_gronwall_times() {
  std::vector<double> t{0.0};
  for (double v : log_samples(0.0, 4.0, 41)) t.push_back(v);
  return t;
}

GronwallKernelReport gronwall_kernel_constant(double p, const std::vector<double>& t, Exec exec) {
  GronwallKernelReport r;
  r.p = p;
  r.c3 = gronwall_c3(p);
  r.t = t;
  std::sort(r.t.begin(), r.t.end());
  r.value.assign(r.t.size(), 0.0);
  std::vector<double> errs(r.t.size(), 0.0);
  const int n = static_cast<int>(r.t.size());
  bool failed = false;
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int i = 0; i < n; ++i) {
    try {
      r.value[i] = gronwall_integral(r.t[i], p, &errs[i]);
    } catch (const std::exception&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw Error(ErrorCode::QuadratureNotConverged, "Gronwall kernel quadrature");
  r.sup = 0.0;
  r.monotone = true;
  for (int i = 0; i < n; ++i) {
    r.sup = std::max(r.sup, r.value[i]);
    r.max_error = std::max(r.max_error, errs[i]);
    if (i > 0 && r.value[i] < r.value[i - 1] - 1e-12 * std::abs(r.value[i - 1])) r.monotone = false;
  }
  r.pass = r.sup <= r.c3 + r.max_error && r.max_error < 1e-3;
  return r;
}

double gronwall_eps_threshold(double p, double c1, double c2) {
  return 1.0 / (9.0 * c1 * c2 * gronwall_c3(p));
}

GronwallIterationReport gronwall_iteration_check(double p, double c1, double c2, double eps,
                                                 double t_final, double dt) {
  if (p <= 1.0 || c1 <= 0.0 || c2 <= 0.0 || eps < 0.0 || dt <= 0.0 || t_final < dt)
    throw Error(ErrorCode::InvalidArgument, "Gronwall iteration parameters");
  GronwallIterationReport r;
  r.eps = eps;
  r.threshold = gronwall_eps_threshold(p, c1, c2);
  const int n = static_cast<int>(std::ceil(t_final / dt));
  r.t.resize(n + 1);
  for (int i = 0; i <= n; ++i) r.t[i] = i * dt;

  // Product trapezoid: exact-enough moments of (1 + tau)^{-p} against the hat functions.
  std::vector<double> A(n), B(n);
  for (int m = 0; m < n; ++m) {
    auto kern = [&](double sig) { return std::pow(1.0 + (m + sig) * dt, -p); };
    A[m] = dt * boost::math::quadrature::gauss<double, 10>::integrate([&](double s) { return s * kern(s); }, 0.0, 1.0);
    B[m] = dt * boost::math::quadrature::gauss<double, 10>::integrate([&](double s) { return (1.0 - s) * kern(s); }, 0.0, 1.0);
  }
  std::vector<double> forcing(n + 1), phi(n + 1), next(n + 1), g(n + 1);
  for (int i = 0; i <= n; ++i) forcing[i] = c1 * eps * std::pow(1.0 + r.t[i], -p);
  phi = forcing;
  const double blowup = 1e6 * std::max(c1 * eps, 1e-300);
  for (int it = 1; it <= 500; ++it) {
    for (int i = 0; i <= n; ++i) g[i] = (eps + phi[i]) * phi[i];
    double change = 0.0, scale = 0.0;
    for (int i = 0; i <= n; ++i) {
      double conv = 0.0;
      // interval [t_j, t_{j+1}] sits at lag m = i - 1 - j
      for (int j = 0; j < i; ++j) conv += A[i - 1 - j] * g[j] + B[i - 1 - j] * g[j + 1];
      next[i] = forcing[i] + c2 * conv;
      if (!std::isfinite(next[i]) || next[i] > blowup)
        throw Error(ErrorCode::IterationDiverged, "iterate exceeded blow-up level at iteration " + std::to_string(it));
      change = std::max(change, std::abs(next[i] - phi[i]));
      scale = std::max(scale, next[i]);
    }
    phi.swap(next);
    r.iterations = it;
    if (change <= 1e-13 * scale || scale == 0.0) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged) throw Error(ErrorCode::IterationDiverged, "fixed point not reached in 500 iterations");
  r.phi = phi;
  r.bound_holds = true;
  for (int i = 0; i <= n; ++i) {
    const double bound = 3.0 * c1 * eps * std::pow(1.0 + r.t[i], -(p - 1.0));
    if (bound > 0.0) r.worst_ratio = std::max(r.worst_ratio, phi[i] / bound);
    if (phi[i] > bound) r.bound_holds = false;
  }
  return r;
}

RemainderTerms remainder_terms(Decomposer& shifts, const WaveProfile& p, const Field& psi2,
                               double tau, const Field& w, Exec exec) {
  const Grid& g = p.grid;
  const int n = g.n_points;
  if (static_cast<int>(w.size()) != n) throw Error(ErrorCode::DimensionMismatch, "remainder field size");
  const Field vt = shifts.shifted_profile(tau);
  const Field vxt = shifts.shifted_derivative(tau);
  RemainderTerms out;
  out.r_f.resize(n);
  kernels::nonlinear_difference(p.params, vt.data(), w.data(), out.r_f.data(), n, exec);
  for (int j = 0; j < n; ++j) out.r_f[j] -= evaluate_Df(p.params, p.v_star[j]) * w[j];
  const double denom = l2_inner(psi2, vxt, g, exec);
  if (std::abs(denom) < 1e-12) throw Error(ErrorCode::DerivativeDegenerate, "(psi2, shifted v_x) vanishes");
  out.r_tau = l2_inner(psi2, out.r_f, g, exec) / denom;
  Field pre(n);
  for (int j = 0; j < n; ++j) pre[j] = vxt[j] * out.r_tau + out.r_f[j];
  const Field P = projector_Pk(pre, psi2, p.v_x, g);
  out.r_w.resize(n);
  for (int j = 0; j < n; ++j) out.r_w[j] = pre[j] - P[j];
  return out;
}

std::vector<RemainderSample> random_remainder_samples(const Grid& g, int count, std::uint64_t seed,
                                                      double radius, double tau_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-10.0, 10.0), width(0.5, 3.0), size(0.2, 1.0),
      coeff(-1.0, 1.0), shift(-tau_max, tau_max);
  std::vector<RemainderSample> out(count);
  for (auto& s : out) {
    s.tau = tau_max > 0.0 ? shift(rng) : 0.0;
    s.w.assign(g.n_points, Vec2::Zero());
    for (int b = 0; b < 4; ++b) {
      const double x0 = centre(rng), sw = width(rng);
      const Vec2 a{coeff(rng), coeff(rng)};
      for (int j = 0; j < g.n_points; ++j) {
        const double z = (g.x[j] - x0) / sw;
        s.w[j] += a * std::exp(-0.5 * z * z);
      }
    }
    s.w.front().setZero();
    s.w.back().setZero();
    const double nrm = weighted_norm(s.w, {0.0, 1}, g);
    const double target = radius * size(rng);
    for (auto& v : s.w) v *= target / nrm;
  }
  return out;
}

RemainderReport remainder_checks(const WaveProfile& p, const Field& psi2,
                                 const std::vector<RemainderSample>& samples,
                                 const RemainderOptions& opt) {
  opt.rates.validate();
  if (samples.size() < 4) throw Error(ErrorCode::InsufficientSamples, "need at least two sample pairs");
  const Grid& g = p.grid;
  const WeightedNormSpec wspec{opt.rates.k, 1}, rspec{opt.rates.k, 0};
  for (const auto& s : samples) {
    if (std::abs(s.tau) > opt.ball_radius || weighted_norm(s.w, {0.0, 1}, g, opt.exec) > opt.ball_radius * (1 + 1e-12))
      throw Error(ErrorCode::OutsideSmallnessBall, "sample outside the ball of radius " + std::to_string(opt.ball_radius));
  }
  Decomposer shifts(p, psi2, ShiftMethod::Resolve);
  RemainderReport r;

  const Field zero(g.n_points, Vec2::Zero());
  r.rf_at_zero = weighted_norm(remainder_terms(shifts, p, psi2, 0.0, zero, opt.exec).r_f, rspec, g, opt.exec);

  Field half = samples.front().w;
  for (auto& v : half) v *= 0.5;
  const double full_norm = weighted_norm(remainder_terms(shifts, p, psi2, 0.0, samples.front().w, opt.exec).r_f, rspec, g, opt.exec);
  const double half_norm = weighted_norm(remainder_terms(shifts, p, psi2, 0.0, half, opt.exec).r_f, rspec, g, opt.exec);
  r.quadratic_ratio = full_norm > 0.0 ? half_norm / full_norm : 0.0;
  r.quadratic_ok = std::abs(r.quadratic_ratio - 0.25) <= 0.2 * 0.25;

  const int pairs = static_cast<int>(samples.size() / 2);
  r.pairs = pairs;
  std::vector<double> ratio(pairs);
  for (int i = 0; i < pairs; ++i) {
    const auto& s1 = samples[2 * i];
    const auto& s2 = samples[2 * i + 1];
    const double tau = s1.tau;
    const RemainderTerms t1 = remainder_terms(shifts, p, psi2, tau, s1.w, opt.exec);
    const RemainderTerms t2 = remainder_terms(shifts, p, psi2, tau, s2.w, opt.exec);
    r.r_tau.push_back(t1.r_tau);
    for (const auto* t : {&t1, &t2}) {
      const double rw = weighted_norm(t->r_w, rspec, g, opt.exec);
      if (rw > 0.0) {
        const Field P = projector_Pk(t->r_w, psi2, p.v_x, g);
        r.max_projection_rw = std::max(r.max_projection_rw, weighted_norm(P, rspec, g, opt.exec) / rw);
      }
    }
    Field dr(g.n_points), dw(g.n_points);
    for (int j = 0; j < g.n_points; ++j) {
      dr[j] = t1.r_f[j] - t2.r_f[j];
      dw[j] = s1.w[j] - s2.w[j];
    }
    const double scale = std::abs(tau) + std::max(weighted_norm(s1.w, {0.0, 1}, g, opt.exec),
                                                  weighted_norm(s2.w, {0.0, 1}, g, opt.exec));
    ratio[i] = weighted_norm(dr, rspec, g, opt.exec) / (scale * weighted_norm(dw, wspec, g, opt.exec));
  }
  const int half_pairs = pairs / 2;
  r.lipschitz_a = *std::max_element(ratio.begin(), ratio.begin() + half_pairs);
  r.lipschitz_b = *std::max_element(ratio.begin() + half_pairs, ratio.end());
  r.lipschitz_stable = std::abs(r.lipschitz_a - r.lipschitz_b) <= 0.25 * std::max(r.lipschitz_a, r.lipschitz_b);
  r.pass = r.rf_at_zero == 0.0 && r.quadratic_ok && r.max_projection_rw <= 1e-10 && r.lipschitz_stable;
  return r;
}

}  // namespace tofwave
