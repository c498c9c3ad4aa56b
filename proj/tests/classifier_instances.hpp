#pragma once

#include <random>

#include <Eigen/Dense>

#include "tofwave/spectral.hpp"

// Random block-matrix inputs: the hyperbolic case and the simple-center case.
namespace tofwave::testing {

struct BlockInstance {
  Eigen::MatrixXd A, B;
  Eigen::MatrixXcd C;
};

inline Eigen::MatrixXd gaussian(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd M(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = n(rng);
  return M;
}

inline Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(m, rng));
  return qr.householderQ();
}

inline Eigen::MatrixXcd random_unitary(int m, std::mt19937_64& rng) {
  const Eigen::MatrixXcd Z = gaussian(m, rng).cast<cplx>() + cplx(0, 1) * gaussian(m, rng).cast<cplx>();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  return qr.householderQ();
}

// SPD part with eigenvalues in [lo, lo + 2] plus a skew part.
inline Eigen::MatrixXd positive_real(int m, double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const Eigen::MatrixXd Q = random_orthogonal(m, rng);
  Eigen::VectorXd d(m);
  for (int i = 0; i < m; ++i) d[i] = lo + u(rng);
  const Eigen::MatrixXd G = gaussian(m, rng);
  return Q * d.asDiagonal() * Q.transpose() + 0.5 * (G - G.transpose());
}

inline double lower_bound_real(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  return es.eigenvalues().minCoeff();
}

inline double lower_bound_complex(const Eigen::MatrixXcd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (C + C.adjoint()));
  return es.eigenvalues().minCoeff();
}

// lambda^-(A), lambda^-(C) > 0 and |B - B^T|^2 < 16 lambda^-(A) lambda^-(C), by rejection.
inline BlockInstance hyperbolic_instance(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (;;) {
    BlockInstance b;
    b.A = positive_real(m, u(rng), rng);
    const Eigen::MatrixXd H = positive_real(m, u(rng), rng);
    const Eigen::MatrixXd K = gaussian(m, rng);
    b.C = 0.5 * (H + H.transpose()).cast<cplx>() + cplx(0, 1) * (0.5 * (K + K.transpose())).cast<cplx>();
    const Eigen::MatrixXd S = gaussian(m, rng), T = gaussian(m, rng);
    b.B = 0.5 * (S + S.transpose()) + u(rng) * 0.5 * (T - T.transpose());
    const double la = lower_bound_real(b.A), lc = lower_bound_complex(b.C);
    const double skew = (b.B - b.B.transpose()).operatorNorm();
    if (la > 0.0 && lc > 0.0 && skew * skew < 0.9 * 16.0 * la * lc) return b;
  }
}

// lambda^-(A) > 0, B = b I with b > 0, C normal with a simple zero eigenvalue and Re spec >= 0.
inline BlockInstance center_instance(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> re(0.1, 2.0), im(-2.0, 2.0), bd(0.2, 3.0);
  BlockInstance b;
  b.A = positive_real(m, re(rng), rng);
  b.B = bd(rng) * Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXcd mu(m);
  mu[0] = 0.0;
  for (int i = 1; i < m; ++i) mu[i] = cplx(re(rng), im(rng));
  const Eigen::MatrixXcd U = random_unitary(m, rng);
  b.C = U * mu.asDiagonal() * U.adjoint();
  return b;
}

}  // namespace tofwave::testing
