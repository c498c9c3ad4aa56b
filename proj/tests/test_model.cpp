#include <doctest.h>

#include <cmath>
#include <random>

#include "tofwave/errors.hpp"
#include "tofwave/model.hpp"

using namespace tofwave;

namespace {

ModelParams derived_set() { return quintic_params({0.5, 0.0}, {-0.1, 0.5}, {1.0, 1.0}, {-1.0, 1.0}); }

}  // namespace

TEST_CASE("f vanishes at the origin and matches the polynomial by hand") {
  const ModelParams p = quintic_params({0.5, 0.0}, {-0.25, 0.5}, {1.0, 1.0}, {-1.0, 1.0});
  CHECK(evaluate_f(p, Vec2::Zero()).norm() == 0.0);
  const Vec2 f = evaluate_f(p, Vec2(1.0, 0.0));
  // g(1) = beta0 + beta2 + beta4
  CHECK(f[0] == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(2.5).epsilon(1e-15));
  const double a = 0.7;
  const Vec2 fa = evaluate_f(p, Vec2(a, 0.0));
  const cplx g = p.G(a * a);
  CHECK(fa[0] == doctest::Approx(a * g.real()));
  CHECK(fa[1] == doctest::Approx(a * g.imag()));
}

TEST_CASE("Df at zero is the rotation form of g(0)") {
  const ModelParams p = default_params();
  const Mat2 J = evaluate_Df(p, Vec2::Zero());
  CHECK((J - rotmat(p.G(0.0))).norm() < 1e-15);
}

TEST_CASE("Df at the rest state has the lower-triangular limit structure") {
  const ModelParams p = default_params();
  const RestState rs = solve_rest_state(p);
  const Mat2 C = rs.S_omega() + evaluate_Df(p, rs.v_inf);
  CHECK(std::abs(C(0, 1)) < 1e-12);
  CHECK(std::abs(C(1, 1)) < 1e-12);
  CHECK(C(0, 0) == doctest::Approx(rs.sigma1).epsilon(1e-12));
  CHECK(C(1, 0) == doctest::Approx(rs.sigma2).epsilon(1e-12));
}

TEST_CASE("Df matches central differences at second order") {
  const ModelParams p = default_params();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec2 u(n(rng), n(rng)), d(n(rng), n(rng));
    const Vec2 exact = evaluate_Df(p, u) * d;
    double errs[2];
    int i = 0;
    for (double h : {1e-3, 5e-4}) {
      const Vec2 fd = (evaluate_f(p, u + h * d) - evaluate_f(p, u - h * d)) / (2.0 * h);
      errs[i++] = (fd - exact).norm();
    }
    CHECK(errs[0] < 1e-4 * (1.0 + exact.norm()));
    if (errs[0] > 1e-9) CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("gauge equivariance of f") {
  const ModelParams p = default_params();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> th(-M_PI, M_PI);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 u(n(rng), n(rng));
    const Mat2 R = rotation(th(rng));
    CHECK((evaluate_f(p, R * u) - R * evaluate_f(p, u)).norm() < 1e-12 * (1.0 + evaluate_f(p, u).norm()));
  }
}

TEST_CASE("f_difference agrees with the direct difference and is accurate for tiny increments") {
  const ModelParams p = default_params();
  const Vec2 b(1.3, -0.4), u(0.2, 0.1);
  CHECK((f_difference(p, b, u) - (evaluate_f(p, b + u) - evaluate_f(p, b))).norm() < 1e-13);
  const Vec2 tiny(1e-14, -2e-14);
  const Vec2 lin = evaluate_Df(p, b) * tiny;
  CHECK((f_difference(p, b, tiny) - lin).norm() < 1e-9 * lin.norm());
}

TEST_CASE("rest state of the derived parameter set against the quadratic formula") {
  const ModelParams p = derived_set();
  const RestState rs = solve_rest_state(p);
  const double r = (1.0 + std::sqrt(0.6)) / 2.0;
  CHECK(std::abs(rs.r_inf - r) < 1e-12);
  CHECK(rs.dg1 == doctest::Approx(1.0 - 2.0 * r).epsilon(1e-12));
  CHECK(rs.omega == doctest::Approx(-(0.5 + r + r * r)).epsilon(1e-12));
  CHECK(rs.v_inf[1] == 0.0);
  const Mat2 sum = rotmat(p.G(rs.r_inf)) + rs.S_omega();
  CHECK(sum.norm() < 1e-12);
}

TEST_CASE("rest state of the shipped parameter set") {
  const ModelParams p = default_params();
  const RestState rs = solve_rest_state(p);
  // g1(r) = -3 + 4 r - r^2
  const double r = (-4.0 - std::sqrt(16.0 - 12.0)) / -2.0;
  CHECK(std::abs(rs.r_inf - r) < 1e-12);
  CHECK(rs.omega == doctest::Approx(-(0.5 + 0.5 * 3.0 + 0.5 * 9.0)));
  CHECK(validate_assumptions(p, rs).all());
}

TEST_CASE("double root and negative-definite g1 have no stable root") {
  const ModelParams figure = quintic_params({0.5, 0.0}, {-0.25, 0.5}, {1.0, 1.0}, {-1.0, 1.0});
  CHECK_THROWS_AS(solve_rest_state(figure), Error);
  try {
    solve_rest_state(figure);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoStableRoot);
  }
  const ModelParams none = quintic_params({0.5, 0.0}, {-2.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0});
  CHECK_THROWS_AS(solve_rest_state(none), Error);
}

TEST_CASE("assumption checks") {
  const ModelParams p = derived_set();
  const RestState rs = solve_rest_state(p);
  const AssumptionReport ok = validate_assumptions(p, rs);
  CHECK(ok.a1);
  CHECK(ok.a2);
  CHECK(ok.a3);
  CHECK(ok.a3_margin == doctest::Approx(0.5 * (1.0 - (1.0 + std::sqrt(0.6)))).epsilon(1e-12));
  ModelParams neg = p;
  neg.alpha = {-1.0, 0.0};
  CHECK_FALSE(validate_assumptions(neg, rs).a1);
  ModelParams imag = p;
  imag.alpha = {0.0, 1.0};
  CHECK_FALSE(validate_assumptions(imag, rs).a1);
}

TEST_CASE("custom nonlinearity reproduces the quintic closed form") {
  const ModelParams q = default_params();
  ModelParams c;
  c.alpha = q.alpha;
  c.nonlinearity = CustomNonlinearity{[q](double r) { return q.G(r); }, [q](double r) { return q.dG(r); },
                                      [q](double r) { return q.d2G(r); }};
  const RestState a = solve_rest_state(q), b = solve_rest_state(c);
  CHECK(std::abs(a.r_inf - b.r_inf) < 1e-10);
  CHECK(std::abs(a.omega - b.omega) < 1e-9);
}

TEST_CASE("G increment is accurate for tiny deltas") {
  const ModelParams p = default_params();
  const double r = 3.0, d = 1e-13;
  const cplx inc = p.increment(r, d);
  const cplx lin = p.dG(r) * d;
  CHECK(std::abs(inc - lin) < 1e-6 * std::abs(lin));
}
