#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "classifier_instances.hpp"
#include "fixtures.hpp"
#include "tofwave/errors.hpp"
#include "tofwave/spectral.hpp"

using namespace tofwave;
using testing::default_wave;

namespace {

// Each element of a has a partner in b within tol.
bool same_set(std::vector<cplx> a, std::vector<cplx> b, double tol) {
  if (a.size() != b.size()) return false;
  for (const cplx& x : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](cplx p, cplx q) { return std::abs(p - x) < std::abs(q - x); });
    if (std::abs(*it - x) > tol) return false;
    b.erase(it);
  }
  return true;
}

std::vector<cplx> eig2(const Mat2& C) {
  Eigen::EigenSolver<Mat2> es(C);
  return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

}  // namespace

TEST_CASE("dispersion curves at zero wavenumber are the limit eigenvalues") {
  const LimitMatrices& lm = default_wave().limits;
  const auto curves = dispersion_curves(lm, {-1.0, 0.0, 1.0});
  for (Side side : {Side::Minus, Side::Plus}) {
    std::vector<cplx> at0;
    for (const auto& c : curves)
      if (c.side == side) at0.push_back(c.s[1]);
    CHECK(same_set(at0, eig2(lm.C(side)), 1e-12));
  }
}

TEST_CASE("dispersion points solve the determinant equation and come in conjugate pairs") {
  const LimitMatrices& lm = default_wave().limits;
  const auto nu = symmetric_nu_grid(5.0, 50);
  CHECK(nu.size() == 101);
  const auto curves = dispersion_curves(lm, nu, Exec::Serial);
  const auto par = dispersion_curves(lm, nu, Exec::Parallel);
  for (size_t b = 0; b < curves.size(); ++b) {
    CHECK(curves[b].s == par[b].s);
    for (size_t i = 0; i < nu.size(); ++i) {
      const cplx s = curves[b].s[i];
      const double scale = 1.0 + std::norm(s) + nu[i] * nu[i] * nu[i] * nu[i];
      CHECK(std::abs(dispersion_residual(lm, curves[b].side, nu[i], s)) < 1e-10 * scale);
      CHECK(std::abs(dispersion_residual(lm, curves[b].side, -nu[i], std::conj(s))) < 1e-10 * scale);
    }
  }
}

TEST_CASE("tangency fit recovers the curvature of a synthetic parabola") {
  SpectralCurve c;
  for (int i = -100; i <= 100; ++i) {
    const double t = 0.002 * i;
    c.nu.push_back(t);
    c.s.push_back({-2.0 * t * t, t});
  }
  const TangencyFit f = fit_tangency(c, 0.1);
  CHECK(f.kappa == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.residual < 1e-14);
  CHECK(f.closest == 0.0);
  SpectralCurve sparse;
  sparse.s = {{0.0, 0.01}, {0.0, 0.02}};
  CHECK_THROWS_AS(fit_tangency(sparse, 0.1), Error);
}

TEST_CASE("crescent membership") {
  const CrescentParams p{0.1, 0.3, 2.0, 1.0};
  REQUIRE(p.valid());
  CHECK_FALSE(crescent_contains({0.0, 0.0}, p));
  CHECK(crescent_contains({0.01, 0.0}, p));
  CHECK_FALSE(crescent_contains({-0.01, 0.0}, p));
  CHECK(crescent_contains({-0.01, 0.5}, p));
  CHECK_FALSE(crescent_contains({-0.05, 0.5}, p));
  CHECK_FALSE(crescent_contains({1.5, 0.0}, p));
  // past rho the sector opens linearly
  CHECK(sector_contains({-0.4 - 0.29, 3.0}, p));
  CHECK_FALSE(sector_contains({-0.4 - 0.31, 3.0}, p));
  CHECK_FALSE((CrescentParams{0.1, 0.3, 1.0, 2.0}).valid());
}

TEST_CASE("4x4 eigenvalues") {
  Mat4c D = Mat4c::Zero();
  D.diagonal() << cplx(1, 0), cplx(-2, 1), cplx(0, 0), cplx(3, -1);
  const auto ev = eigens_4x4(D);
  CHECK(same_set({ev.begin(), ev.end()}, {{1, 0}, {-2, 1}, {0, 0}, {3, -1}}, 1e-14));
  std::mt19937_64 rng(2);
  const Eigen::MatrixXcd U = testing::random_unitary(4, rng);
  const Mat4c S = U * D * U.adjoint();
  const auto ev2 = eigens_4x4(S);
  CHECK(same_set({ev2.begin(), ev2.end()}, {ev.begin(), ev.end()}, 1e-12));
}

TEST_CASE("plus-side spatial system at s = 0 has the rest-state kernel vector") {
  const LimitMatrices& lm = default_wave().limits;
  const Mat4c M = lm.M(Side::Plus, 0.0);
  Eigen::Vector4cd e(0.0, 1.0, 0.0, 0.0);
  CHECK((M * e).norm() < 1e-14);
  const auto ev = eigens_4x4(M);
  double smallest = INFINITY;
  for (const auto& z : ev) smallest = std::min(smallest, std::abs(z));
  CHECK(smallest < 1e-12);
  const auto [unstable_minus, stable_plus] = morse_counts(lm, {0.5, 0.0});
  CHECK(unstable_minus == 2);
  CHECK(stable_plus == 2);
}

TEST_CASE("block matrix classifier on hand examples") {
  using Eigen::MatrixXd;
  using Eigen::MatrixXcd;
  const MatrixXd one = MatrixXd::Ones(1, 1), zero = MatrixXd::Zero(1, 1);
  CHECK(classify_block_matrix(one, zero, MatrixXcd::Ones(1, 1)) == BlockCounts{1, 0, 1});
  CHECK(classify_block_matrix(one, zero, MatrixXcd::Zero(1, 1)) == BlockCounts{0, 2, 0});
  // lambda^2 + lambda = 0
  CHECK(classify_block_matrix(one, one, MatrixXcd::Zero(1, 1)) == BlockCounts{1, 1, 0});
  CHECK_THROWS_AS(classify_block_matrix(zero, one, MatrixXcd::Ones(1, 1)), Error);
  CHECK_THROWS_AS(classify_block_matrix(MatrixXd::Identity(2, 2), zero, MatrixXcd::Ones(1, 1)), Error);
}

TEST_CASE("block matrix classifier on random instances") {
  std::mt19937_64 rng(17);
  for (int m : {2, 3, 5}) {
    CAPTURE(m);
    for (int trial = 0; trial < 30; ++trial) {
      const auto h = testing::hyperbolic_instance(m, rng);
      CHECK(classify_block_matrix(h.A, h.B, h.C) == BlockCounts{m, 0, m});
      const auto c = testing::center_instance(m, rng);
      CHECK(classify_block_matrix(c.A, c.B, c.C) == BlockCounts{m, 1, m - 1});
    }
  }
}

TEST_CASE("classifier counts are invariant under orthogonal similarity") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = testing::hyperbolic_instance(3, rng);
    const Eigen::MatrixXd Q = testing::random_orthogonal(3, rng);
    const Eigen::MatrixXcd Qc = Q.cast<cplx>();
    CHECK(classify_block_matrix(b.A, b.B, b.C) ==
          classify_block_matrix(Q * b.A * Q.transpose(), Q * b.B * Q.transpose(), Qc * b.C * Qc.adjoint()));
  }
  CHECK(testing::lower_bound_real(Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(1.0));
  CHECK(lower_spectral_bound(Eigen::MatrixXcd::Identity(2, 2) * 3.0) == doctest::Approx(3.0));
}

TEST_CASE("assembled operator on a constant field") {
  const Grid g = Grid::make(3.0, 31);
  const Mat2 A = rotmat({0.5, 0.1});
  Mat2 B;
  B << 0.3, -1.0, 2.0, 0.7;
  const double c = 1.3;
  const DiscreteOperator L = assemble_operator(g, A, c, std::vector<Mat2>(g.n_points, B));
  CHECK(L.dim() == 2 * 29);
  const Vec2 u(0.4, -1.1);
  const Field out = L.apply(Field(g.n_points, u));
  for (int j = 2; j < g.n_points - 2; ++j) CHECK((out[j] - B * u).norm() < 1e-12);
  const Mat2 off = A / (g.h * g.h);
  CHECK((out[1] - (B * u - (off - c / (2 * g.h) * Mat2::Identity()) * u)).norm() < 1e-11);
  CHECK((out[g.n_points - 2] - (B * u - (off + c / (2 * g.h) * Mat2::Identity()) * u)).norm() < 1e-11);
  CHECK(out.front().norm() == 0.0);
  CHECK(out.back().norm() == 0.0);
}

TEST_CASE("adjoint operator is the transpose and its null vector is normalized") {
  const BaseWave& w = default_wave();
  const DiscreteOperator La = assemble_L_adjoint(w.profile);
  CHECK(adjoint_transpose_difference(w.L, La) < 1e-12);
  CHECK(std::abs(l2_inner(w.adjoint.psi2, w.profile.v_x, w.profile.grid) - 1.0) < 1e-10);
  CHECK(w.adjoint.residual < 1e-8);
  CHECK(w.adjoint.sigma[0] < 1e-6 * w.adjoint.sigma[1]);
  CHECK(std::abs(w.adjoint.left_rate / w.adjoint.left_rate_pred - 1.0) < 0.1);
}

TEST_CASE("kernel projector") {
  const BaseWave& w = default_wave();
  const Grid& g = w.profile.grid;
  const Field& psi = w.adjoint.psi2;
  const Field& vx = w.profile.v_x;
  CHECK(testing::sup_diff(projector_Pk(vx, psi, vx, g), vx) < 1e-10);
  std::mt19937_64 rng(4);
  const Field r = testing::random_field(g, rng, 3.0);
  const Field Pr = projector_Pk(r, psi, vx, g);
  CHECK(testing::sup_diff(projector_Pk(Pr, psi, vx, g), Pr) < 1e-12);
  Field rest(r.size());
  for (size_t j = 0; j < r.size(); ++j) rest[j] = r[j] - Pr[j];
  CHECK(std::abs(l2_inner(psi, rest, g)) < 1e-12 * weighted_norm(r, {0, 0}, g) * weighted_norm(psi, {0, 0}, g));
}

TEST_CASE("resolvent solve is linear and inverts s - L") {
  const BaseWave& w = default_wave();
  const Grid& g = w.profile.grid;
  std::mt19937_64 rng(8);
  const Field r1 = testing::random_field(g, rng, 3.0), r2 = testing::random_field(g, rng, 3.0);
  Field comb(g.n_points);
  for (int j = 0; j < g.n_points; ++j) comb[j] = 2.0 * r1[j] - 0.5 * r2[j];
  const cplx s(0.05, 0.2);
  const CField a = resolvent_solve(w.L, r1, s), b = resolvent_solve(w.L, r2, s), ab = resolvent_solve(w.L, comb, s);
  double err = 0.0, scale = 0.0;
  for (int j = 0; j < g.n_points; ++j) {
    err = std::max(err, std::abs(ab[j][0] - (2.0 * a[j][0] - 0.5 * b[j][0])));
    scale = std::max(scale, std::abs(ab[j][0]));
  }
  CHECK(err < 1e-10 * scale);
  // real shift: (s - L) v = r componentwise
  const CField v = resolvent_solve(w.L, r1, 0.05);
  Field vr(g.n_points);
  for (int j = 0; j < g.n_points; ++j) vr[j] = Vec2(v[j][0].real(), v[j][1].real());
  const Field Lv = w.L.apply(vr);
  double res = 0.0;
  for (int j = 1; j < g.n_points - 1; ++j) res = std::max(res, (0.05 * vr[j] - Lv[j] - r1[j]).norm());
  CHECK(res < 1e-9);
}

TEST_CASE("resolvent of the kernel vector grows like 1/|s|") {
  const BaseWave& w = default_wave();
  const ResolventAnalysis a = analyze_resolvent(w, Config{});
  CHECK(a.pass());
  CHECK(a.kernel_slope == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("point spectrum probe") {
  const BaseWave& w = default_wave();
  const auto curves = dispersion_curves(w.limits, symmetric_nu_grid(20.0, 400));
  SUBCASE("empty box still reports the kernel") {
    SpectrumBox box;
    box.n_re = 0;
    box.n_im = 0;
    const auto rep = point_spectrum_probe(w.L, w.limits, curves, box);
    CHECK(rep.candidates.empty());
    CHECK(rep.violations == 0);
    CHECK(rep.dim_ker == 1);
    CHECK(rep.dim_ker2 == 1);
  }
  SUBCASE("default box has no unstable eigenvalue") {
    const auto rep = point_spectrum_probe(w.L, w.limits, curves, SpectrumBox{});
    CHECK(rep.violations == 0);
    CHECK(rep.dim_ker == 1);
    CHECK(rep.dim_ker2 == 1);
  }
}
