#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace tofwave {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using CVec2 = Eigen::Vector2cd;

// Grid field of 2-vectors, one per node.
using Field = std::vector<Vec2>;
using CField = std::vector<CVec2>;

// Real 2x2 form of multiplication by a complex number.
inline Mat2 rotmat(cplx z) {
  Mat2 m;
  m << z.real(), -z.imag(), z.imag(), z.real();
  return m;
}

inline Mat2 rotation(double theta) { return rotmat(std::polar(1.0, theta)); }

}  // namespace tofwave
