#include "tofwave/gridw.hpp"

#include <cmath>

#include "tofwave/errors.hpp"

namespace tofwave {

Grid Grid::make(double half_width, int n_points) {
  if (n_points < 16) throw Error(ErrorCode::InvalidArgument, "grid needs at least 16 points");
  if (!(half_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid half width must be > 0");
  Grid g;
  g.half_width = half_width;
  g.n_points = n_points;
  g.h = 2.0 * half_width / (n_points - 1);
  g.x.resize(n_points);
  const double denom = n_points - 1;
  // symmetric by construction: x_{N-1-j} = -x_j exactly
  for (int j = 0; j < n_points; ++j) g.x[j] = half_width * (2.0 * j - denom) / denom;
  return g;
}

int Grid::nearest_index(double xv) const {
  const double j = std::round((xv + half_width) / h);
  return static_cast<int>(std::clamp(j, 0.0, static_cast<double>(n_points - 1)));
}

double weight_eta(double x) { return std::sqrt(x * x + 1.0); }

void check_finite(const Field& v, const char* what) {
  for (const auto& e : v)
    if (!std::isfinite(e[0]) || !std::isfinite(e[1]))
      throw Error(ErrorCode::NonFiniteField, std::string(what) + " contains non-finite values");
}

Field first_derivative(const Field& v, const Grid& g) {
  const int n = static_cast<int>(v.size());
  if (n != g.n_points) throw Error(ErrorCode::DimensionMismatch, "field/grid size");
  Field d(n);
  const double s = 0.5 / g.h;
  for (int j = 1; j < n - 1; ++j) d[j] = (v[j + 1] - v[j - 1]) * s;
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * s;
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * s;
  return d;
}

Field second_derivative(const Field& v, const Grid& g) {
  const int n = static_cast<int>(v.size());
  if (n != g.n_points) throw Error(ErrorCode::DimensionMismatch, "field/grid size");
  Field d(n);
  const double s = 1.0 / (g.h * g.h);
  for (int j = 1; j < n - 1; ++j) d[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) * s;
  d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * s;
  d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * s;
  return d;
}

std::vector<double> norm_weights(const Grid& g, double k) {
  std::vector<double> w(g.n_points);
  for (int j = 0; j < g.n_points; ++j)
    w[j] = g.h * g.trap_weight(j) * (k == 0.0 ? 1.0 : std::pow(1.0 + g.x[j] * g.x[j], k));
  return w;
}

double weighted_norm(const Field& v, const WeightedNormSpec& spec, const Grid& g, Exec exec) {
  if (static_cast<int>(v.size()) != g.n_points)
    throw Error(ErrorCode::DimensionMismatch, "field/grid size");
  if (spec.k < 0.0 || spec.order < 0 || spec.order > 2)
    throw Error(ErrorCode::InvalidArgument, "weighted norm spec");
  check_finite(v, "weighted_norm input");
  const auto w = norm_weights(g, spec.k);
  const std::size_t n = v.size();
  double s = kernels::weighted_sumsq(w.data(), v.data(), n, exec);
  if (spec.order >= 1) {
    const Field d = first_derivative(v, g);
    s += kernels::weighted_sumsq(w.data(), d.data(), n, exec);
  }
  if (spec.order >= 2) {
    const Field d2 = second_derivative(v, g);
    s += kernels::weighted_sumsq(w.data(), d2.data(), n, exec);
  }
  return std::sqrt(s);
}

double l2_inner(const Field& a, const Field& b, const Grid& g, Exec exec) {
  if (a.size() != b.size() || static_cast<int>(a.size()) != g.n_points)
    throw Error(ErrorCode::DimensionMismatch, "inner product sizes");
  const auto w = norm_weights(g, 0.0);
  return kernels::weighted_dot(w.data(), a.data(), b.data(), a.size(), exec);
}

PerturbationShape parse_shape(const std::string& s) {
  if (s == "plain") return PerturbationShape::Plain;
  if (s == "modulated") return PerturbationShape::Modulated;
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation shape '" + s + "'");
}

const char* shape_name(PerturbationShape s) {
  return s == PerturbationShape::Plain ? "plain" : "modulated";
}

Field algebraic_perturbation(double k_decay, double amplitude, PerturbationShape shape,
                             const Grid& g) {
  if (!(k_decay > 0.0)) throw Error(ErrorCode::InvalidArgument, "k_decay must be > 0");
  Field u(g.n_points, Vec2::Zero());
  for (int j = 0; j < g.n_points; ++j) {
    const double x = g.x[j];
    const double env = amplitude * std::pow(1.0 + x * x, -0.5 * k_decay);
    if (shape == PerturbationShape::Plain) {
      u[j] = Vec2(env, 0.0);
    } else {
      const double th = 0.5 * x + 0.3;
      u[j] = Vec2(env * std::cos(th), env * std::sin(th));
    }
  }
  return u;
}

double m_star(double m) {
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidArgument, "m must be > 0");
  const double fl = std::floor(m);
  const double q = m - fl;
  return fl + std::max(0.0, 2.0 * q - 1.0);
}

void RateParams::validate() const {
  if (!(m > 4.5)) throw Error(ErrorCode::InvalidArgument, "rates: need m > 9/2");
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "rates: need mu > 0");
  if (!(m + mu <= k + 1e-12)) throw Error(ErrorCode::InvalidArgument, "rates: need m + mu <= k");
}

}  // namespace tofwave
