#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tofwave/errors.hpp"
#include "tofwave/profile.hpp"

using namespace tofwave;
using testing::default_wave;

TEST_CASE("converged profile satisfies its own discrete equations") {
  const WaveProfile& p = default_wave().profile;
  const ProfileProblem prob(p.params, p.grid, p.options);
  const ProfileResidual r = assemble_profile_residual(prob, p.v_star, p.c);
  CHECK(r.sup_norm < 1e-9);
  CHECK(std::abs(r.phase) < 1e-9);
  CHECK(p.residual_norm < 1e-9);
  CHECK(p.c > 0.0);
  CHECK(p.v_star.front().norm() < 1e-6);
  CHECK((p.v_star.back() - p.v_inf).norm() < 1e-6);
  CHECK(p.omega == doctest::Approx(p.rest.omega));
}

TEST_CASE("constant rest field has zero interior residual and a nonzero phase residual") {
  const WaveProfile& p = default_wave().profile;
  const ProfileProblem prob(p.params, p.grid, p.options);
  const Field flat(p.grid.n_points, p.v_inf);
  for (double c : {0.3, 1.7}) {
    const ProfileResidual r = assemble_profile_residual(prob, flat, c);
    double interior = 0.0;
    for (int j = 1; j < p.grid.n_points - 1; ++j) interior = std::max(interior, r.pde[j].norm());
    CHECK(interior < 1e-12);
    CHECK(std::abs(r.phase) > 1e-3);
  }
}

TEST_CASE("second difference stencil is exact on a quadratic test field") {
  const Grid g = Grid::make(4.0, 41);
  ProfileOptions opt;
  opt.check_boundary = false;
  const ProfileProblem prob(default_params(), g, opt);
  // v = limit + q with q quadratic: residual minus the reaction part is A q'' + c q'
  Field dev(g.n_points), zero(g.n_points, Vec2::Zero());
  for (int j = 0; j < g.n_points; ++j) dev[j] = Vec2(g.x[j] * g.x[j], -0.5 * g.x[j] * g.x[j]);
  const double c = 0.8;
  const auto r = assemble_profile_residual_dev(prob, dev, c);
  const auto r0 = assemble_profile_residual_dev(prob, zero, c);
  const Mat2 A = prob.params().A();
  for (int j = 2; j < g.n_points - 2; ++j) {
    if (j == prob.split() || j == prob.split() - 1) continue;
    const Vec2 lin = A * Vec2(2.0, -1.0) + c * Vec2(2.0 * g.x[j], -g.x[j]);
    const Vec2 reac = prob.reaction(j, dev[j]) - prob.reaction(j, Vec2::Zero());
    CHECK((r.pde[j] - r0.pde[j] - lin - reac).norm() < 1e-9);
  }
}

TEST_CASE("manufactured front is recovered") {
  const ManufacturedCheck m = manufactured_check(Config{});
  CHECK(m.sup_error < 1e-8);
  CHECK(m.speed_error < 1e-8);
}

TEST_CASE("tail rates match the far-field eigenvalues") {
  const TailRates& tr = default_wave().profile.tail_rates;
  CHECK(tr.left_ok);
  CHECK(tr.right_ok);
  CHECK(std::abs(tr.left / tr.left_pred - 1.0) < 0.1);
  CHECK(std::abs(tr.right / tr.right_pred - 1.0) < 0.1);
}

TEST_CASE("derivative of the profile is a discrete kernel vector") {
  CHECK(default_wave().kernel_residual < 1e-4);
}

TEST_CASE("moving the phase template by whole grid cells translates the profile") {
  const WaveProfile& p = default_wave().profile;
  const int cells = 10;
  const WaveProfile s = resolve_shifted(p, p.options.template_center + cells * p.grid.h);
  CHECK(std::abs(s.c - p.c) < 1e-10);
  double diff = 0.0;
  for (int j = 0; j + cells < p.grid.n_points - 50; ++j)
    if (j > 50) diff = std::max(diff, (s.v_star[j + cells] - p.v_star[j]).norm());
  CHECK(diff < 1e-6);
}

TEST_CASE("gauge rotation of the rest state rotates the profile") {
  const Config cfg;
  ProfileOptions opt = cfg.profile;
  opt.gauge_angle = 0.7;
  const WaveProfile& p = default_wave().profile;
  const WaveProfile r = solve_profile(cfg.model.params(), cfg.grid.make(), opt);
  CHECK(std::abs(r.c - p.c) < 1e-9);
  const Mat2 R = rotation(0.7);
  double diff = 0.0;
  for (int j = 0; j < p.grid.n_points; ++j) diff = std::max(diff, (r.v_star[j] - R * p.v_star[j]).norm());
  CHECK(diff < 1e-8);
}

TEST_CASE("speed converges at second order under grid refinement") {
  const ModelParams prm = default_params();
  auto speed = [&](int n) { return solve_profile(prm, Grid::make(60.0, n)).c; };
  const double ref = speed(8193);
  const double e1 = std::abs(speed(1025) - ref), e2 = std::abs(speed(2049) - ref);
  const double order = std::log2(e1 / e2);
  CHECK(order > 1.7);
  CHECK(order < 2.3);
}

TEST_CASE("boundary too close to the front is rejected") {
  ProfileOptions opt;
  opt.template_center = 18.0;
  CHECK_THROWS_AS(solve_profile(default_params(), Grid::make(20.0, 401), opt), Error);
}

TEST_CASE("continuation") {
  const WaveProfile& p = default_wave().profile;
  SUBCASE("zero steps returns the input") {
    const auto res = continue_profile(p, p.params, 0);
    REQUIRE(res.family.size() == 1);
    CHECK(res.family[0].c == p.c);
  }
  SUBCASE("loop to the same parameters keeps the speed") {
    const auto res = continue_profile(p, p.params, 2);
    CHECK(res.completed);
    CHECK(std::abs(res.family.back().c - p.c) < 1e-10);
  }
  SUBCASE("speed varies continuously along a beta0 path") {
    const auto& q = p.params.quintic();
    const ModelParams target = quintic_params(p.params.alpha, q.beta0 + cplx(0.2, 0.0), q.beta2, q.beta4);
    const int n = 8;
    const auto res = continue_profile(p, target, n);
    REQUIRE(res.completed);
    double worst = 0.0;
    for (size_t i = 1; i < res.family.size(); ++i)
      worst = std::max(worst, std::abs(res.family[i].c - res.family[i - 1].c) /
                                  (res.params_t[i] - res.params_t[i - 1]));
    CHECK(worst < 5.0);
    CHECK(res.family.back().c != doctest::Approx(p.c));
  }
}
