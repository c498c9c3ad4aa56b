#pragma once

#include <random>

#include "tofwave/experiments.hpp"

namespace tofwave::testing {

// Default wave on the desk-scale grid, solved once per test binary.
inline const BaseWave& default_wave() {
  static const BaseWave w = prepare_wave(Config{});
  return w;
}

inline Field random_field(const Grid& g, std::mt19937_64& rng, double decay = 2.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Field f(g.n_points);
  for (int j = 0; j < g.n_points; ++j) {
    const double env = std::pow(1.0 + g.x[j] * g.x[j], -0.5 * decay);
    f[j] = env * Vec2(n(rng), n(rng));
  }
  f.front().setZero();
  f.back().setZero();
  return f;
}

inline Field smooth_bump(const Grid& g, double center, double width, Vec2 dir) {
  Field f(g.n_points);
  for (int j = 0; j < g.n_points; ++j) {
    const double y = (g.x[j] - center) / width;
    f[j] = std::exp(-y * y) * dir;
  }
  return f;
}

inline double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (size_t j = 0; j < a.size(); ++j) m = std::max(m, (a[j] - b[j]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace tofwave::testing
