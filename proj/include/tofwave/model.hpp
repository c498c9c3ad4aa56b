#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "tofwave/types.hpp"

namespace tofwave {

struct QuinticCoeffs {
  cplx beta0, beta2, beta4;
};

// g(r) = g1(r) + i g2(r) with two derivatives, supplied by the caller.
struct CustomNonlinearity {
  std::function<cplx(double)> g, dg, d2g;
};

struct ModelParams {
  cplx alpha{0.5, 0.0};
  std::variant<QuinticCoeffs, CustomNonlinearity> nonlinearity = QuinticCoeffs{};
  std::string description;
  double r_max = 10.0;

  cplx G(double r) const;
  cplx dG(double r) const;
  cplx d2G(double r) const;
  // G(r + delta) - G(r), accurate when delta is tiny relative to r.
  cplx increment(double r, double delta) const;

  Mat2 A() const { return rotmat(alpha); }
  bool is_quintic() const { return std::holds_alternative<QuinticCoeffs>(nonlinearity); }
  const QuinticCoeffs& quintic() const { return std::get<QuinticCoeffs>(nonlinearity); }
};

ModelParams quintic_params(cplx alpha, cplx beta0, cplx beta2, cplx beta4);
// Shipped parameter set: bistable front with c > 0 and a strongly damped zero state.
ModelParams default_params();

Vec2 evaluate_f(const ModelParams& p, const Vec2& u);
Mat2 evaluate_Df(const ModelParams& p, const Vec2& u);
// f(b + u) - f(b) without cancellation in the size of u.
Vec2 f_difference(const ModelParams& p, const Vec2& b, const Vec2& u);

struct RestState {
  double r_inf = 0.0;
  Vec2 v_inf = Vec2::Zero();
  double omega = 0.0;
  double dg1 = 0.0, dg2 = 0.0;  // g1', g2' at r_inf
  double sigma1 = 0.0, sigma2 = 0.0;
  double a3_combination = 0.0;  // alpha1 g1' + alpha2 g2'
  std::vector<double> stable_roots;
  bool ambiguous = false;

  Mat2 S_omega() const;
};

RestState solve_rest_state(const ModelParams& p);

struct AssumptionReport {
  bool a1 = false, a2 = false, a3 = false;
  double alpha1 = 0.0, g1_at_zero = 0.0;
  double dg1_at_rest = 0.0, omega = 0.0;
  double a3_margin = 0.0;
  std::string a4_note = "requires spectral probe";
  bool all() const { return a1 && a2 && a3; }
};

AssumptionReport validate_assumptions(const ModelParams& p, const RestState& rest);

// Lerp of quintic coefficients, used by continuation.
ModelParams interpolate_params(const ModelParams& a, const ModelParams& b, double t);

}  // namespace tofwave
