#include <doctest.h>

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "tofwave/banded.hpp"

using namespace tofwave;

namespace {

template <class T>
BandedMatrix<T> random_band(int n, int kl, int ku, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  BandedMatrix<T> m(n, kl, ku);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) {
      if constexpr (std::is_same_v<T, double>)
        m.at(i, j) = d(rng);
      else
        m.at(i, j) = T(d(rng), d(rng));
    }
  for (int i = 0; i < n; ++i) m.at(i, i) += T(4.0);
  return m;
}

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> dense(const BandedMatrix<T>& b) {
  const int n = b.size();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (b.in_band(i, j)) m(i, j) = b.at(i, j);
  return m;
}

}  // namespace

TEST_CASE_TEMPLATE("banded multiply and solve agree with a dense oracle", T, double, std::complex<double>) {
  std::mt19937_64 rng(42);
  const int n = 40;
  const auto B = random_band<T>(n, 3, 2, rng);
  const auto D = dense(B);
  std::vector<T> x(n);
  for (int i = 0; i < n; ++i) x[i] = T(std::sin(0.3 * i + 1.0));
  Eigen::Matrix<T, Eigen::Dynamic, 1> ex(n);
  for (int i = 0; i < n; ++i) ex[i] = x[i];
  const auto y = B.multiply(x);
  const auto yt = B.multiply_transposed(x);
  const Eigen::Matrix<T, Eigen::Dynamic, 1> dy = D * ex, dyt = D.transpose() * ex;
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(y[i] - dy[i]) < 1e-12);
    CHECK(std::abs(yt[i] - dyt[i]) < 1e-12);
  }
  BandedLU<T> lu(B);
  REQUIRE(lu.ok());
  const auto s = lu.solve(y);
  const auto st = lu.solve(yt, true);
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(s[i] - x[i]) < 1e-10);
    CHECK(std::abs(st[i] - x[i]) < 1e-10);
  }
}

TEST_CASE("band product matches the dense product") {
  std::mt19937_64 rng(7);
  const auto a = random_band<double>(30, 2, 1, rng);
  const auto b = random_band<double>(30, 1, 3, rng);
  const auto p = band_product(a, b);
  CHECK(p.kl() == 3);
  CHECK(p.ku() == 4);
  CHECK((dense(p) - dense(a) * dense(b)).norm() < 1e-12);
}

TEST_CASE("singular band matrix is reported") {
  BandedMatrix<double> m(5, 1, 1);
  for (int i = 0; i < 5; ++i) m.at(i, i) = 1.0;
  m.at(2, 2) = 0.0;
  m.at(1, 2) = 0.0;
  m.at(3, 2) = 0.0;
  BandedLU<double> lu(m);
  CHECK_FALSE(lu.ok());
}

TEST_CASE("row sum norm") {
  BandedMatrix<double> m(3, 1, 1);
  m.at(0, 0) = 1;
  m.at(0, 1) = -2;
  m.at(1, 0) = 3;
  m.at(1, 1) = 4;
  m.at(1, 2) = -5;
  m.at(2, 2) = 1;
  CHECK(m.max_abs_row_sum() == 12.0);
}
