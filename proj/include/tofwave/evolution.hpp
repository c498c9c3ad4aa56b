#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tofwave/banded.hpp"
#include "tofwave/gridw.hpp"
#include "tofwave/profile.hpp"
#include "tofwave/spectral.hpp"

namespace tofwave {

enum class Scheme { IMEX1, IMEX2 };
enum class ShiftMethod { Resolve, Cubic };

Scheme parse_scheme(const std::string& s);
const char* scheme_name(Scheme s);
ShiftMethod parse_shift_method(const std::string& s);
const char* shift_method_name(ShiftMethod m);

struct SimulationConfig {
  double dt = 0.01;
  double t_final = 200.0;
  Scheme scheme = Scheme::IMEX2;
  RateParams rates;
  int output_stride = 50;
  ShiftMethod shift_method = ShiftMethod::Resolve;
  bool keep_fields = false;
  Exec exec = Exec::Parallel;
};

// Largest explicit step allowed by the reaction part, from max |S_omega + Df(v_star)|.
double preflight_dt_max(const WaveProfile& p);

// IMEX integrator for u = v - base with v_t = A v_xx + c v_x + S_omega v + f(v), base stationary.
// Homogeneous Dirichlet data for u, i.e. v keeps the boundary values of base.
class NonlinearStepper {
 public:
  NonlinearStepper(const ModelParams& params, const Grid& grid, double c, double omega, Field base,
                   double dt, Scheme scheme, Exec exec = Exec::Parallel);
  static NonlinearStepper for_profile(const WaveProfile& p, double dt, Scheme scheme,
                                      Exec exec = Exec::Parallel);

  void step(Field& u);
  Field step_full(const Field& v);
  double dt() const { return dt_; }
  const Field& base() const { return base_; }

 private:
  void explicit_term(const Field& u, Field& out) const;
  void implicit_solve(std::vector<double>& rhs) const;

  ModelParams params_;
  Grid grid_;
  Field base_;
  double dt_;
  Scheme scheme_;
  Exec exec_;
  DiscreteOperator L0_;
  BandedLU<double> lu_;
};

struct DecompositionState {
  double t = 0.0;
  double tau = 0.0;
  Field w;
  double norm_H1k = 0.0;
  double norm_L2k = 0.0;
  double orthogonality = 0.0;  // |(psi2, w)| / |w|
  int newton_iters = 0;
  bool valid = true;
};

struct DecompositionResult {
  double tau = 0.0;
  Field w;
  int iterations = 0;
  double orthogonality = 0.0;
};

// Splits u = v - v_star into a shift of the profile and a remainder orthogonal to psi2.
class Decomposer {
 public:
  Decomposer(const WaveProfile& base, const Field& psi2, ShiftMethod method = ShiftMethod::Resolve);

  DecompositionResult decompose_perturbation(const Field& u, double tau_guess);
  DecompositionResult decompose(const Field& v, double tau_guess);

  // v_star(. - tau) - v_star, computed without cancellation in the tails.
  Field shift_difference(double tau);
  Field shifted_derivative(double tau);
  Field shifted_profile(double tau);

 private:
  void ensure(double tau);

  const WaveProfile& base_;
  const Field& psi_;
  ShiftMethod method_;
  double cached_tau_ = 0.0;
  std::optional<WaveProfile> cached_;
  Field cached_diff_, cached_vx_;
};

struct NonlinearRun {
  std::vector<DecompositionState> states;
  double dt_max = 0.0;
  int steps = 0;
};

NonlinearRun evolve_nonlinear(const Field& u0, const SimulationConfig& cfg, const WaveProfile& p,
                              const Field& psi2);

struct LinearRun {
  std::vector<double> t, norm_H1k, norm_L2k, projection;
  Field final_state;
};

// w_t = L w by backward Euler (IMEX1) or BDF2 (IMEX2). With `reproject`, the kernel
// component (psi2, w) v_x is removed after every step.
LinearRun evolve_linear(const Field& w0, const SimulationConfig& cfg, const DiscreteOperator& L,
                        const Field* psi2 = nullptr, const Field* v_x = nullptr);

struct DecayFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double t0 = 0.0, t1 = 0.0;
  double rms = 0.0;
  double stderr_exponent = 0.0;
  int samples = 0;
  int below_floor = 0;
};

// Samples at or below `floor` are skipped.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t0, double t1,
                   double floor = 0.0);

// Level of a flat tail (last quarter within 1%), or 0 when the series is still moving.
double detect_noise_floor(const std::vector<double>& value);

// Default fit window [t0, min(T, 0.8 L / c)].
std::pair<double, double> default_fit_window(const WaveProfile& p, double t_final, double t0 = 10.0);

struct PhaseFit {
  double tau_inf = 0.0;
  double amplitude = 0.0;
  double p = 0.0;
  double rms = 0.0;
  int samples = 0;
  bool settled = false;
};

PhaseFit asymptotic_phase(const std::vector<double>& t, const std::vector<double>& tau, double p0,
                          double t_start = 10.0);

}  // namespace tofwave
