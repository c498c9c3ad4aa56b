#pragma once

#include <string>
#include <vector>

#include "tofwave/evolution.hpp"
#include "tofwave/gridw.hpp"
#include "tofwave/model.hpp"
#include "tofwave/profile.hpp"
#include "tofwave/spectral.hpp"
#include "tofwave/verify.hpp"

namespace tofwave {

struct ModelConfig {
  cplx alpha{0.5, 0.1};
  cplx beta0{-3.0, 0.5};
  cplx beta2{4.0, 0.5};
  cplx beta4{-1.0, 0.5};
  ModelParams params() const { return quintic_params(alpha, beta0, beta2, beta4); }
};

struct GridConfig {
  double half_width = 200.0;
  int points = 4096;
  Grid make() const { return Grid::make(half_width, points); }
};

struct EvolutionConfig {
  SimulationConfig sim;
  double amplitude = 1e-3;
  PerturbationShape shape = PerturbationShape::Modulated;
  double decay = 0.0;        // 0: use k + m + mu from [rates]
  double shift = 0.0;        // nonzero: pure-shift initial data instead of algebraic data
  double fit_t0 = 5.0;
  double floor_factor = 10.0;  // samples below factor * detected floor are not fitted
};

struct SpectralConfig {
  double nu_max = 20.0;
  int nu_half = 2000;
  double tangency_radius = 0.1;
  int paths = 5;
  double path_t_max = 0.1;
  SpectrumBox box;
  ProbeOptions probe;
  double s_min = 1e-3, s_max = 1e-1;
  int s_points = 9;
};

struct VerifyConfig {
  SweepSpec sweep;
  double kernel3_beta0 = 1.0;
  double gronwall_t_final = 1000.0;
  double gronwall_dt = 0.25;
  double c1 = 1.0, c2 = 1.0;
  int remainder_pairs = 100;
  double ball_radius = 0.05;
};

struct Config {
  ModelConfig model;
  GridConfig grid;
  ProfileOptions profile;
  RateParams rates;
  EvolutionConfig evolution;
  SpectralConfig spectral;
  VerifyConfig verify;
};

// Plain-text format: [section] headers, key = value lines, # comments.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
// Canonical text: every key in fixed order, shortest round-trip numbers.
std::string serialize_config(const Config& cfg);
std::string normalize_config_text(const std::string& text);
// "section.key=value"
void apply_override(Config& cfg, const std::string& assignment);
void validate_config(const Config& cfg);

std::vector<std::string> config_keys();  // "section.key" in canonical order

}  // namespace tofwave
