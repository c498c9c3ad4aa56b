#include "tofwave/model.hpp"

#include <algorithm>
#include <cmath>

#include "tofwave/errors.hpp"

namespace tofwave {

cplx ModelParams::G(double r) const {
  if (const auto* q = std::get_if<QuinticCoeffs>(&nonlinearity))
    return q->beta0 + r * (q->beta2 + r * q->beta4);
  return std::get<CustomNonlinearity>(nonlinearity).g(r);
}

cplx ModelParams::dG(double r) const {
  if (const auto* q = std::get_if<QuinticCoeffs>(&nonlinearity)) return q->beta2 + 2.0 * r * q->beta4;
  return std::get<CustomNonlinearity>(nonlinearity).dg(r);
}

cplx ModelParams::d2G(double r) const {
  if (const auto* q = std::get_if<QuinticCoeffs>(&nonlinearity)) return 2.0 * q->beta4;
  return std::get<CustomNonlinearity>(nonlinearity).d2g(r);
}

cplx ModelParams::increment(double r, double delta) const {
  if (const auto* q = std::get_if<QuinticCoeffs>(&nonlinearity))
    return (q->beta2 + 2.0 * r * q->beta4) * delta + q->beta4 * delta * delta;
  // Taylor branch only where the dropped cubic term is below roundoff of the linear one.
  if (std::abs(delta) < 1e-6 * std::max(1.0, std::abs(r)))
    return dG(r) * delta + 0.5 * d2G(r) * delta * delta;
  return G(r + delta) - G(r);
}

ModelParams quintic_params(cplx alpha, cplx beta0, cplx beta2, cplx beta4) {
  ModelParams p;
  p.alpha = alpha;
  p.nonlinearity = QuinticCoeffs{beta0, beta2, beta4};
  return p;
}

ModelParams default_params() {
  ModelParams p = quintic_params({0.5, 0.1}, {-3.0, 0.5}, {4.0, 0.5}, {-1.0, 0.5});
  p.description = "quintic default";
  return p;
}

Vec2 evaluate_f(const ModelParams& p, const Vec2& u) { return rotmat(p.G(u.squaredNorm())) * u; }

Mat2 evaluate_Df(const ModelParams& p, const Vec2& u) {
  const double r = u.squaredNorm();
  return rotmat(p.G(r)) + 2.0 * rotmat(p.dG(r)) * (u * u.transpose());
}

Vec2 f_difference(const ModelParams& p, const Vec2& b, const Vec2& u) {
  const double r = b.squaredNorm();
  const double delta = 2.0 * b.dot(u) + u.squaredNorm();
  return rotmat(p.G(r)) * u + rotmat(p.increment(r, delta)) * (b + u);
}

Mat2 RestState::S_omega() const {
  Mat2 s;
  s << 0.0, -omega, omega, 0.0;
  return s;
}

namespace {

std::vector<double> real_quadratic_roots(double a, double b, double c) {
  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  if (disc == 0.0) {
    roots.push_back(-b / (2.0 * a));
    return roots;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  roots.push_back(q / a);
  if (q != 0.0) roots.push_back(c / q);
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> sampled_roots(const ModelParams& p) {
  // Sign changes of g1 on a fine sample of [0, r_max], refined by bisection.
  std::vector<double> roots;
  const int n = 4000;
  auto g1 = [&](double r) { return p.G(r).real(); };
  double a = 0.0, fa = g1(a);
  for (int i = 1; i <= n; ++i) {
    const double b = p.r_max * i / n;
    const double fb = g1(b);
    if (fa == 0.0) roots.push_back(a);
    else if (fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = g1(mid);
        if (flo * fm <= 0.0) hi = mid;
        else { lo = mid; flo = fm; }
      }
      double r = 0.5 * (lo + hi);
      for (int it = 0; it < 3; ++it) {
        const double d = p.dG(r).real();
        if (d == 0.0) break;
        const double step = g1(r) / d;
        if (std::abs(step) > hi - lo) break;
        r -= step;
      }
      roots.push_back(r);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace

RestState solve_rest_state(const ModelParams& p) {
  std::vector<double> roots;
  if (p.is_quintic()) {
    const auto& q = p.quintic();
    roots = real_quadratic_roots(q.beta4.real(), q.beta2.real(), q.beta0.real());
  } else {
    roots = sampled_roots(p);
  }
  RestState rest;
  for (double r : roots) {
    if (!(r > 0.0) || !std::isfinite(r)) continue;
    const double d1 = p.dG(r).real();
    const double scale = std::max({1.0, std::abs(p.dG(0.0).real()), std::abs(r)});
    if (d1 < -1e-12 * scale) rest.stable_roots.push_back(r);
  }
  if (rest.stable_roots.empty())
    throw Error(ErrorCode::NoStableRoot, "g1 has no positive root with g1' < 0");
  std::sort(rest.stable_roots.begin(), rest.stable_roots.end());
  rest.ambiguous = rest.stable_roots.size() > 1;
  rest.r_inf = rest.stable_roots.back();
  rest.v_inf = Vec2(std::sqrt(rest.r_inf), 0.0);
  rest.omega = -p.G(rest.r_inf).imag();
  const cplx d = p.dG(rest.r_inf);
  rest.dg1 = d.real();
  rest.dg2 = d.imag();
  rest.sigma1 = 2.0 * rest.dg1 * rest.r_inf;
  rest.sigma2 = 2.0 * rest.dg2 * rest.r_inf;
  rest.a3_combination = p.alpha.real() * rest.dg1 + p.alpha.imag() * rest.dg2;
  return rest;
}

AssumptionReport validate_assumptions(const ModelParams& p, const RestState& rest) {
  AssumptionReport rep;
  rep.alpha1 = p.alpha.real();
  rep.g1_at_zero = p.G(0.0).real();
  rep.a1 = rep.alpha1 > 0.0 && rep.g1_at_zero < 0.0;
  rep.dg1_at_rest = rest.dg1;
  rep.omega = rest.omega;
  rep.a2 = rest.dg1 < 0.0 && std::abs(rest.omega) > 1e-12;
  rep.a3_margin = rest.a3_combination;
  rep.a3 = rest.a3_combination < 0.0;
  return rep;
}

ModelParams interpolate_params(const ModelParams& a, const ModelParams& b, double t) {
  if (!a.is_quintic() || !b.is_quintic())
    throw Error(ErrorCode::InvalidArgument, "continuation needs quintic coefficients");
  const auto& qa = a.quintic();
  const auto& qb = b.quintic();
  ModelParams out = a;
  out.alpha = (1.0 - t) * a.alpha + t * b.alpha;
  out.nonlinearity = QuinticCoeffs{(1.0 - t) * qa.beta0 + t * qb.beta0,
                                   (1.0 - t) * qa.beta2 + t * qb.beta2,
                                   (1.0 - t) * qa.beta4 + t * qb.beta4};
  return out;
}

}  // namespace tofwave
