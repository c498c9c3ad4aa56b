#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tofwave/evolution.hpp"
#include "tofwave/gridw.hpp"
#include "tofwave/profile.hpp"

namespace tofwave {

// Log-spaced sample points; x additionally may include 0.
struct SweepSpec {
  double x_lo_exp = -2.0, x_hi_exp = 3.0;
  int x_points = 21;
  bool include_x_zero = true;
  double beta_lo_exp = -4.0, beta_hi_exp = 3.0;
  int beta_points = 29;
  double beta_max = 0.0;  // > 0 clips the beta samples from above
  int gk_points = 15;     // 15 or 31
  double x_extend_factor = 1.0;  // > 1 appends samples up to factor * 10^x_hi_exp

  void validate() const;
  std::vector<double> x_samples() const;
  std::vector<double> beta_samples() const;
  SweepSpec refined() const;       // gk_points 31
  SweepSpec extended_x() const;    // x upper end doubled
};

// Single integrals. Throw QuadratureNotConverged on a poor error estimate.
// eta^k(x) int_x^inf eta^{-(k+q)}(y) e^{beta(x-y)} dy
double kernel1_integral(double x, double beta, double k, double q, int gk_points = 15);
// int_0^x eta^{-q}(y) e^{beta(y-x)} dy
double kernel2_integral(double x, double beta, double q, int gk_points = 15);
// log of int_0^x eta^{-q}(y) e^{beta(x-y)} dy, the orientation that grows with x
double kernel2_display_integral(double x, double beta, double q, int gk_points = 15);
// eta^k(x) int_0^x eta^{-k}(y) e^{beta(y-x)} dy
double kernel3_integral(double x, double beta, double k, int gk_points = 15);
double kernel3_penalty(double beta, double k);

struct KernelReport {
  std::string check;
  double k = 0.0, q = 0.0;
  double sup = 0.0;
  double arg_x = 0.0, arg_beta = 0.0;
  double sup_refined = 0.0;     // gk 31
  double sup_extended = 0.0;    // x range doubled
  double refinement_drift = 0.0;
  double range_drift = 0.0;
  double bound = 0.0;           // explicit constant when one is known, else 0
  double display_sup = 0.0;     // kernel 2 only
  bool pass = false;
};

// With zero_beta the sweep is over x only at beta = 0 (requires q = 1).
KernelReport kernel_bound_1(double k, double q, const SweepSpec& sweep, bool zero_beta = false,
                            Exec exec = Exec::Parallel);
KernelReport kernel_bound_2(double q, const SweepSpec& sweep, Exec exec = Exec::Parallel);
KernelReport kernel_bound_3(double k, double beta0, const SweepSpec& sweep,
                            Exec exec = Exec::Parallel);

// k^{-1} 2^{(k+1)/2}
double kernel1_explicit_constant(double k);

double gronwall_c3(double p);
// int_0^t (1+t)^{p-1} / ((1+s)^{p-1} (1+t-s)^p) ds
double gronwall_integral(double t, double p, double* error_estimate = nullptr);

struct GronwallKernelReport {
  double p = 0.0;
  double c3 = 0.0;
  double sup = 0.0;
  double max_error = 0.0;
  bool monotone = false;  // diagnostic only: the integral overshoots its limit for p >= 2
  bool pass = false;
  std::vector<double> t, value;
};

std::vector<double> default_gronwall_times();
GronwallKernelReport gronwall_kernel_constant(double p, const std::vector<double>& t,
                                              Exec exec = Exec::Parallel);

struct GronwallIterationReport {
  double eps = 0.0, threshold = 0.0;
  int iterations = 0;
  bool converged = false;
  bool bound_holds = false;
  double worst_ratio = 0.0;  // max phi / (3 C1 eps (1+t)^{-(p-1)})
  std::vector<double> t, phi;
};

double gronwall_eps_threshold(double p, double c1, double c2);
// Throws IterationDiverged when the fixed-point iteration blows up.
GronwallIterationReport gronwall_iteration_check(double p, double c1, double c2, double eps,
                                                 double t_final, double dt);

struct RemainderSample {
  double tau = 0.0;
  Field w;
};

struct RemainderOptions {
  RateParams rates;
  double ball_radius = 0.05;  // bound on |tau| and |w|_{H^1}
  Exec exec = Exec::Parallel;
};

struct RemainderReport {
  double rf_at_zero = 0.0;
  double quadratic_ratio = 0.0;  // |r_f(0, w/2)| / |r_f(0, w)|
  bool quadratic_ok = false;
  double max_projection_rw = 0.0;  // max |P r_w| / |r_w|
  double lipschitz_a = 0.0, lipschitz_b = 0.0;
  bool lipschitz_stable = false;
  int pairs = 0;
  std::vector<double> r_tau;
  bool pass = false;
};

struct RemainderTerms {
  Field r_f, r_w;
  double r_tau = 0.0;
};

// r_f = f(v*(.-tau) + w) - f(v*(.-tau)) - Df(v*) w and the derived phase and field remainders.
RemainderTerms remainder_terms(Decomposer& shifts, const WaveProfile& p, const Field& psi2,
                               double tau, const Field& w, Exec exec = Exec::Parallel);

// Smooth random localized fields of H^1 norm `radius`*U(0.2, 1), tau uniform in [-tau_max, tau_max].
std::vector<RemainderSample> random_remainder_samples(const Grid& g, int count, std::uint64_t seed,
                                                      double radius, double tau_max);

// Pairs are consecutive samples (the first one's tau is used for both); the first half of the
// pairs and the second half give two independent Lipschitz constants.
RemainderReport remainder_checks(const WaveProfile& p, const Field& psi2,
                                 const std::vector<RemainderSample>& samples,
                                 const RemainderOptions& opt = {});

}  // namespace tofwave
