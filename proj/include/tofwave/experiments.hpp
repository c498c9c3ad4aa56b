#pragma once

#include <vector>

#include "tofwave/config.hpp"
#include "tofwave/evolution.hpp"
#include "tofwave/spectral.hpp"

// End-to-end pipelines shared by the command-line tool and the acceptance runner.
namespace tofwave {

struct BaseWave {
  WaveProfile profile;
  DiscreteOperator L;
  AdjointNull adjoint;
  LimitMatrices limits;
  double kernel_residual = 0.0;  // |L v_x| / |v_x|
};

BaseWave prepare_wave(const Config& cfg);

struct ManufacturedCheck {
  double sup_error = 0.0;
  double speed_error = 0.0;
  int iterations = 0;
};

// Forces a twisted tanh front to be an exact discrete solution and solves for it from the template.
ManufacturedCheck manufactured_check(const Config& cfg, double width = 1.0, double twist = 0.1,
                                     double speed = 1.2);

struct DispersionAnalysis {
  std::vector<SpectralCurve> curves;
  int critical = -1;
  double closest = 0.0;
  TangencyFit tangency, tangency_half;
  double halving_drift = 0.0;  // relative change of kappa when the fit radius is halved
  CrescentParams crescent;
  int points = 0;
  int inside_crescent = 0;
  bool pass() const;
};

DispersionAnalysis analyze_dispersion(const LimitMatrices& lm, const SpectralConfig& sc,
                                      Exec exec = Exec::Parallel);

struct LambdaAnalysis {
  LambdaDerivatives derivs;
  double c = 0.0;
  double kappa_star = 0.0;  // |q| / 2
  std::vector<PathRatio> paths;
  double min_path_ratio = 0.0;
  double d1_error = 0.0;  // |lambda'(0) c - 1|
  double d2_error = 0.0;  // relative to 2q/c
  bool pass() const;
};

LambdaAnalysis analyze_lambda(const LimitMatrices& lm, const ModelParams& p, const SpectralConfig& sc);

struct ResolventAnalysis {
  double idempotence = 0.0;          // |P P r - P r| / |P r|
  double normalization_error = 0.0;  // |(psi2, v_x) - 1|
  std::vector<ResolventRow> complement_rows, kernel_rows;
  double complement_ratio = 0.0;  // max/min |v| for P r = 0
  double kernel_slope = 0.0;      // log-log slope of |v| against |s| for r = v_x
  bool pass() const;
};

std::vector<cplx> resolvent_path(const SpectralConfig& sc);
ResolventAnalysis analyze_resolvent(const BaseWave& w, const Config& cfg, Exec exec = Exec::Parallel);

struct LinearDecayExperiment {
  LinearRun run, kernel_run;
  DecayFit fit, kernel_fit;
  double floor = 0.0;
  double target = 0.0;  // -m*/2 + 0.3
  bool pass() const;
};

LinearDecayExperiment linear_decay_experiment(const BaseWave& w, const Config& cfg);

struct NonlinearExperiment {
  NonlinearRun run;
  double amplitude = 0.0, shift = 0.0;
  double initial_norm = 0.0;  // |u0| in H^1 with weight k + m + mu
  DecayFit fit;
  double floor = 0.0;
  PhaseFit phase;
  double rate_target = 0.0;   // -(m* - 2)/2 + 0.3
  double phase_target = 0.0;  // (m* - 4)/2 - 0.3
  bool all_valid = false;
  bool decay_ok() const { return all_valid && fit.exponent <= rate_target; }
  bool phase_ok() const { return all_valid && (phase.settled || phase.p >= phase_target); }
};

// shift != 0 replaces the algebraic data by v*(. - shift) - v*.
NonlinearExperiment nonlinear_experiment(const BaseWave& w, const Config& cfg, double amplitude,
                                         double shift = 0.0);

// max_i |r_i / mean(r) - 1| with r_i = |tau_i| / amplitude_i.
double phase_linearity(const std::vector<double>& amplitude, const std::vector<double>& tau_inf);

}  // namespace tofwave
