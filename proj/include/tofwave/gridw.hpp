#pragma once

#include <string>
#include <vector>

#include "tofwave/kernels.hpp"
#include "tofwave/types.hpp"

namespace tofwave {

struct Grid {
  double half_width = 0.0;
  int n_points = 0;
  double h = 0.0;
  std::vector<double> x;

  static Grid make(double half_width, int n_points);
  int size() const { return n_points; }
  int nearest_index(double xv) const;
  // trapezoid weights without the factor h
  double trap_weight(int j) const { return (j == 0 || j == n_points - 1) ? 0.5 : 1.0; }
};

double weight_eta(double x);

struct WeightedNormSpec {
  double k = 0.0;
  int order = 0;  // Sobolev order, 0..2
};

Field first_derivative(const Field& v, const Grid& g);
Field second_derivative(const Field& v, const Grid& g);

// Trapezoid quadrature weights h * w_j * eta^{2k}.
std::vector<double> norm_weights(const Grid& g, double k);

double weighted_norm(const Field& v, const WeightedNormSpec& spec, const Grid& g,
                     Exec exec = Exec::Parallel);
double l2_inner(const Field& a, const Field& b, const Grid& g, Exec exec = Exec::Parallel);

enum class PerturbationShape { Plain, Modulated };
PerturbationShape parse_shape(const std::string& s);
const char* shape_name(PerturbationShape s);

Field algebraic_perturbation(double k_decay, double amplitude, PerturbationShape shape,
                             const Grid& g);

double m_star(double m);

struct RateParams {
  double m = 4.75;
  double k = 10.0;
  double mu = 0.25;

  void validate() const;
  double m_star() const { return tofwave::m_star(m); }
  double data_decay() const { return k + m + mu; }
};

void check_finite(const Field& v, const char* what);

}  // namespace tofwave
