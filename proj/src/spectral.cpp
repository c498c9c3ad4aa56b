#include "tofwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "tofwave/errors.hpp"

namespace tofwave {

const char* side_name(Side s) { return s == Side::Minus ? "minus" : "plus"; }

Mat4c LimitMatrices::M(Side side, cplx s) const {
  const Eigen::Matrix2cd Ainv = A.inverse().cast<cplx>();
  const Eigen::Matrix2cd shifted = s * Eigen::Matrix2cd::Identity() - C(side).cast<cplx>();
  Mat4c m = Mat4c::Zero();
  m.block<2, 2>(0, 2) = Eigen::Matrix2cd::Identity();
  m.block<2, 2>(2, 0) = Ainv * shifted;
  m.block<2, 2>(2, 2) = -c * Ainv;
  return m;
}

Eigen::Matrix2cd LimitMatrices::D(Side side, double nu) const {
  return (-nu * nu) * A.cast<cplx>() + cplx(0.0, nu * c) * Eigen::Matrix2cd::Identity() +
         C(side).cast<cplx>();
}

LimitMatrices limit_matrices(const ModelParams& p, const RestState& rest, double c) {
  LimitMatrices lm;
  lm.A = p.A();
  lm.c = c;
  lm.C_minus = rest.S_omega() + rotmat(p.G(0.0));
  lm.sigma1 = rest.sigma1;
  lm.sigma2 = rest.sigma2;
  // S_omega + Df(v_inf) after using g(|v_inf|^2) = -S_omega
  lm.C_plus << rest.sigma1, 0.0, rest.sigma2, 0.0;
  return lm;
}

// ---------------------------------------------------------------------------

std::array<cplx, 4> eigens_4x4(const Mat4c& M) {
  if (!M.allFinite()) throw Error(ErrorCode::NoConvergence, "non-finite matrix");
  // characteristic polynomial by Faddeev-LeVerrier: p(x) = x^4 + a3 x^3 + a2 x^2 + a1 x + a0
  std::array<cplx, 5> a{};
  a[4] = 1.0;
  Mat4c Mk = Mat4c::Zero();
  for (int k = 1; k <= 4; ++k) {
    Mk = M * Mk + a[4 - k + 1] * Mat4c::Identity();
    a[4 - k] = -(M * Mk).trace() / static_cast<double>(k);
  }
  auto poly = [&](cplx x) { return (((x + a[3]) * x + a[2]) * x + a[1]) * x + a[0]; };
  auto dpoly = [&](cplx x) { return ((4.0 * x + 3.0 * a[3]) * x + 2.0 * a[2]) * x + a[1]; };
  double R = 1.0;
  for (int i = 0; i < 4; ++i) R = std::max(R, 1.0 + std::abs(a[i]));
  std::array<cplx, 4> z;
  const cplx seed(0.4, 0.9);
  for (int i = 0; i < 4; ++i) z[i] = 0.5 * R * std::pow(seed, i + 1);
  bool done = false;
  for (int it = 0; it < 1000 && !done; ++it) {
    double change = 0.0;
    for (int i = 0; i < 4; ++i) {
      cplx den = 1.0;
      for (int j = 0; j < 4; ++j)
        if (j != i) den *= (z[i] - z[j]);
      if (den == cplx(0.0)) den = 1e-300;
      const cplx step = poly(z[i]) / den;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * R) done = true;
  }
  if (!done) throw Error(ErrorCode::NoConvergence, "Durand-Kerner did not converge");
  for (auto& zi : z) {
    for (int it = 0; it < 3; ++it) {
      const cplx d = dpoly(zi);
      if (std::abs(d) < 1e-300) break;
      const cplx step = poly(zi) / d;
      if (!(std::abs(step) < 1e-6 * R)) break;
      zi -= step;
    }
  }
  std::sort(z.begin(), z.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return z;
}

std::array<cplx, 4> spatial_eigenvalues(const ModelParams& p, const RestState& rest, double c,
                                        Side side, cplx s) {
  return eigens_4x4(limit_matrices(p, rest, c).M(side, s));
}

// ---------------------------------------------------------------------------

namespace {

std::array<cplx, 2> quadratic_roots(cplx tr, cplx det) {
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  const cplx big = 0.5 * ((std::real(std::conj(tr) * disc) >= 0.0) ? tr + disc : tr - disc);
  if (big == cplx(0.0)) return {cplx(0.0), cplx(0.0)};
  return {big, det / big};
}

}  // namespace

std::vector<double> symmetric_nu_grid(double nu_max, int n_half) {
  std::vector<double> nu(2 * n_half + 1);
  for (int i = -n_half; i <= n_half; ++i) nu[i + n_half] = nu_max * i / n_half;
  nu[n_half] = 0.0;
  return nu;
}

double dispersion_residual(const LimitMatrices& lm, Side side, double nu, cplx s) {
  const Eigen::Matrix2cd D = lm.D(side, nu);
  const Eigen::Matrix2cd P = s * Eigen::Matrix2cd::Identity() - D;
  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  return std::abs(P.determinant()) / (scale * std::max(1.0, std::abs(s)));
}

std::vector<SpectralCurve> dispersion_curves(const LimitMatrices& lm, const std::vector<double>& nu_grid,
                                             Exec exec) {
  std::vector<SpectralCurve> curves;
  const long long n = static_cast<long long>(nu_grid.size());
  int id = 0;
  for (Side side : {Side::Minus, Side::Plus}) {
    std::vector<std::array<cplx, 2>> roots(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long long i = 0; i < n; ++i) {
      const Eigen::Matrix2cd D = lm.D(side, nu_grid[i]);
      roots[i] = quadratic_roots(D.trace(), D.determinant());
    }
    SpectralCurve b0, b1;
    b0.branch_id = id++;
    b1.branch_id = id++;
    b0.side = b1.side = side;
    for (long long i = 0; i < n; ++i) {
      auto r = roots[i];
      if (i > 0) {
        const cplx p0 = b0.s.back(), p1 = b1.s.back();
        const double keep = std::abs(r[0] - p0) + std::abs(r[1] - p1);
        const double swap = std::abs(r[1] - p0) + std::abs(r[0] - p1);
        if (swap < keep) std::swap(r[0], r[1]);
      }
      b0.nu.push_back(nu_grid[i]);
      b1.nu.push_back(nu_grid[i]);
      b0.s.push_back(r[0]);
      b1.s.push_back(r[1]);
    }
    curves.push_back(std::move(b0));
    curves.push_back(std::move(b1));
  }
  return curves;
}

int critical_branch(const std::vector<SpectralCurve>& curves) {
  int best = -1;
  double dmin = INFINITY;
  for (size_t b = 0; b < curves.size(); ++b) {
    if (curves[b].side != Side::Plus) continue;
    for (const auto& s : curves[b].s)
      if (std::abs(s) < dmin) {
        dmin = std::abs(s);
        best = static_cast<int>(b);
      }
  }
  return best;
}

TangencyFit fit_tangency(const SpectralCurve& curve, double radius) {
  TangencyFit f;
  f.closest = INFINITY;
  double num = 0.0, den = 0.0;
  std::vector<cplx> used;
  for (const auto& s : curve.s) {
    f.closest = std::min(f.closest, std::abs(s));
    if (std::abs(s) < radius && std::abs(s.imag()) > 0.0) {
      const double y2 = s.imag() * s.imag();
      num += s.real() * y2;
      den += y2 * y2;
      used.push_back(s);
    }
  }
  f.samples = static_cast<int>(used.size());
  if (f.samples < 5) throw Error(ErrorCode::InsufficientSamples, "fewer than 5 samples near the origin");
  f.kappa = -num / den;
  double ss = 0.0;
  for (const auto& s : used) {
    const double e = s.real() + f.kappa * s.imag() * s.imag();
    ss += e * e;
  }
  f.residual = std::sqrt(ss / f.samples);
  return f;
}

bool sector_contains(cplx s, const CrescentParams& p) {
  const double ai = std::abs(s.imag());
  const double m = std::min(ai, p.rho);
  return s.real() >= -p.kappa * m * m + p.gamma * std::min(p.rho - ai, 0.0);
}

bool crescent_contains(cplx s, const CrescentParams& p) {
  if (s == cplx(0.0) || std::abs(s) > p.delta) return false;
  return sector_contains(s, p);
}

CrescentParams fit_crescent(const std::vector<SpectralCurve>& curves, double kappa_fit) {
  CrescentParams cp;
  cp.kappa = 0.9 * kappa_fit;
  std::vector<cplx> pts;
  for (const auto& c : curves)
    for (const auto& s : c.s)
      if (std::abs(s) > 1e-12) pts.push_back(s);
  std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) { return std::abs(a.imag()) < std::abs(b.imag()); });
  double rho0 = pts.empty() ? 1.0 : std::abs(pts.back().imag());
  for (const auto& s : pts)
    if (s.real() >= -cp.kappa * s.imag() * s.imag()) {
      rho0 = std::abs(s.imag());
      break;
    }
  double rho = 0.5 * rho0;
  auto clear_beyond = [&](double r) {
    for (const auto& s : pts)
      if (std::abs(s.imag()) > r && !(s.real() < -cp.kappa * r * r)) return false;
    return true;
  };
  for (int i = 0; i < 60 && !clear_beyond(rho); ++i) rho *= 0.5;
  cp.rho = rho;
  double g = INFINITY;
  for (const auto& s : pts) {
    const double ai = std::abs(s.imag());
    if (ai > rho) g = std::min(g, (-cp.kappa * rho * rho - s.real()) / (ai - rho));
  }
  cp.gamma = std::isfinite(g) ? 0.5 * g : 1.0;
  cp.delta = 0.5 * rho;
  return cp;
}

// ---------------------------------------------------------------------------

cplx refine_lambda(const LimitMatrices& lm, cplx s, cplx guess) {
  const Eigen::Matrix2cd A = lm.A.cast<cplx>();
  const Eigen::Matrix2cd Cs = lm.C_plus.cast<cplx>() - s * Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  cplx l = guess;
  for (int it = 0; it < 30; ++it) {
    const Eigen::Matrix2cd P = l * l * A + lm.c * l * I + Cs;
    const Eigen::Matrix2cd dP = 2.0 * l * A + lm.c * I;
    Eigen::Matrix2cd adj;
    adj << P(1, 1), -P(0, 1), -P(1, 0), P(0, 0);
    const cplx f = P.determinant();
    const cplx df = (adj * dP).trace();
    if (f == cplx(0.0) || std::abs(df) < 1e-300) break;
    const cplx step = f / df;
    l -= step;
    if (std::abs(step) < 1e-16 * (1.0 + std::abs(l))) break;
  }
  return l;
}

namespace {

double min_gap(const std::array<cplx, 4>& e) {
  double g = INFINITY;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) g = std::min(g, std::abs(e[i] - e[j]));
  return g;
}

// One continuation step from (s0, l0, eig0) to s1, subdividing when matching is unsafe.
void track_step(const LimitMatrices& lm, cplx s0, cplx l0, const std::array<cplx, 4>& eig0, cplx s1,
                int depth, LambdaTrack& out, cplx& l_out, std::array<cplx, 4>& eig_out) {
  const auto eig1 = eigens_4x4(lm.M(Side::Plus, s1));
  const double radius = 0.4 * min_gap(eig0);
  std::array<double, 4> d;
  for (int i = 0; i < 4; ++i) d[i] = std::abs(eig1[i] - l0);
  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  const bool ok = d[order[0]] <= radius;
  if (ok && d[order[1]] <= radius)
    throw Error(ErrorCode::BranchCollision, "two eigenvalues inside the matching radius");
  if (!ok) {
    if (depth > 20) throw Error(ErrorCode::BranchCollision, "step subdivision exhausted");
    ++out.refinements;
    const cplx sm = 0.5 * (s0 + s1);
    cplx lm_mid;
    std::array<cplx, 4> em;
    track_step(lm, s0, l0, eig0, sm, depth + 1, out, lm_mid, em);
    track_step(lm, sm, lm_mid, em, s1, depth + 1, out, l_out, eig_out);
    return;
  }
  l_out = refine_lambda(lm, s1, eig1[order[0]]);
  eig_out = eig1;
}

}  // namespace

LambdaTrack track_lambda(const LimitMatrices& lm, const std::vector<cplx>& s_path) {
  if (s_path.empty() || s_path.front() != cplx(0.0))
    throw Error(ErrorCode::InvalidArgument, "s path must start at 0");
  LambdaTrack tr;
  auto eig = eigens_4x4(lm.M(Side::Plus, 0.0));
  const auto it = std::min_element(eig.begin(), eig.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  cplx l = refine_lambda(lm, 0.0, *it);
  tr.samples.push_back({0.0, l});
  for (size_t i = 1; i < s_path.size(); ++i) {
    cplx ln;
    std::array<cplx, 4> en;
    track_step(lm, s_path[i - 1], l, eig, s_path[i], 0, tr, ln, en);
    l = ln;
    eig = en;
    tr.samples.push_back({s_path[i], l});
  }
  return tr;
}

LambdaDerivatives lambda_derivatives(const LimitMatrices& lm, const ModelParams& p, double h) {
  LambdaDerivatives d;
  const double c = lm.c;
  auto lam = [&](double s) { return refine_lambda(lm, s, s / c); };
  d.lambda0 = refine_lambda(lm, 0.0, 0.0);
  auto first = [&](double hh) { return (lam(hh) - lam(-hh)) / (2.0 * hh); };
  auto second = [&](double hh) { return (lam(hh) - 2.0 * d.lambda0 + lam(-hh)) / (hh * hh); };
  d.d1 = (4.0 * first(0.5 * h) - first(h)) / 3.0;
  d.d2 = (4.0 * second(0.5 * h) - second(h)) / 3.0;
  const double a1 = p.alpha.real(), a2 = p.alpha.imag();
  d.q = -(a1 * lm.sigma1 + a2 * lm.sigma2) / (c * c * lm.sigma1);
  d.d2_expected = 2.0 * d.q / c;
  return d;
}

PathRatio parabolic_path_ratio(const LimitMatrices& lm, double a, double t_max, int n) {
  std::vector<cplx> path(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = t_max * i / n;
    path[i] = cplx(-a * t * t, t);
  }
  const auto tr = track_lambda(lm, path);
  PathRatio pr;
  pr.a = a;
  pr.min_ratio = INFINITY;
  pr.max_ratio = -INFINITY;
  for (size_t i = 1; i < tr.samples.size(); ++i) {
    const cplx l = tr.samples[i].lambda;
    const double r = l.real() / std::norm(l);
    pr.min_ratio = std::min(pr.min_ratio, r);
    pr.max_ratio = std::max(pr.max_ratio, r);
  }
  return pr;
}

// ---------------------------------------------------------------------------

double lower_spectral_bound(const Eigen::MatrixXcd& M) {
  const Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

BlockCounts classify_block_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXcd& C) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || B.rows() != m || B.cols() != m || C.rows() != m || C.cols() != m)
    throw Error(ErrorCode::DimensionMismatch, "block matrix sizes");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  const double amax = std::max(1e-300, A.cwiseAbs().maxCoeff());
  if (lu.rank() < m || std::abs(lu.determinant()) < 1e-14 * std::pow(amax, static_cast<double>(m)))
    throw Error(ErrorCode::SingularA, "A is not invertible");
  const Eigen::MatrixXd Ainv = lu.inverse();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  M.block(0, m, m, m) = Eigen::MatrixXcd::Identity(m, m);
  M.block(m, 0, m, m) = Ainv.cast<cplx>() * C;
  M.block(m, m, m, m) = (-Ainv * B).cast<cplx>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
  const auto ev = es.eigenvalues();
  double scale = 1.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) scale = std::max(scale, std::abs(ev[i]));
  const double tol = 1e-9 * scale;
  BlockCounts bc;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i].real() < -tol) ++bc.stable;
    else if (ev[i].real() > tol) ++bc.unstable;
    else ++bc.center;
  }
  return bc;
}

// ---------------------------------------------------------------------------

std::vector<double> to_interior(const Field& u) {
  const int n = static_cast<int>(u.size());
  std::vector<double> v(2 * (n - 2));
  for (int j = 1; j < n - 1; ++j) {
    v[2 * (j - 1)] = u[j][0];
    v[2 * (j - 1) + 1] = u[j][1];
  }
  return v;
}

Field from_interior(const std::vector<double>& v, int n_points) {
  Field u(n_points, Vec2::Zero());
  for (int j = 1; j < n_points - 1; ++j) u[j] = Vec2(v[2 * (j - 1)], v[2 * (j - 1) + 1]);
  return u;
}

CField from_interior_c(const std::vector<cplx>& v, int n_points) {
  CField u(n_points, CVec2::Zero());
  for (int j = 1; j < n_points - 1; ++j) u[j] = CVec2(v[2 * (j - 1)], v[2 * (j - 1) + 1]);
  return u;
}

Field DiscreteOperator::apply(const Field& u) const {
  if (static_cast<int>(u.size()) != grid.n_points)
    throw Error(ErrorCode::DimensionMismatch, "operator/field size");
  return from_interior(matrix.multiply(to_interior(u)), grid.n_points);
}

std::vector<Mat2> reaction_blocks(const WaveProfile& p) {
  ProfileProblem prob(p.params, p.grid, p.options);
  std::vector<Mat2> b(p.grid.n_points);
  for (int j = 0; j < p.grid.n_points; ++j) b[j] = prob.reaction_jacobian(j, p.dev[j]);
  return b;
}

DiscreteOperator assemble_operator(const Grid& g, const Mat2& diffusion, double advection,
                                   const std::vector<Mat2>& blocks) {
  const int ni = g.n_points - 2;
  DiscreteOperator op;
  op.grid = g;
  op.matrix = BandedMatrix<double>(2 * ni, 3, 3);
  const double h = g.h;
  const Mat2 off = diffusion / (h * h);
  const Mat2 lo = off - Mat2::Identity() * (advection / (2.0 * h));
  const Mat2 hi = off + Mat2::Identity() * (advection / (2.0 * h));
  for (int i = 0; i < ni; ++i) {
    const Mat2 mid = -2.0 * off + blocks[i + 1];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        op.matrix.at(2 * i + a, 2 * i + b) = mid(a, b);
        if (i > 0) op.matrix.at(2 * i + a, 2 * (i - 1) + b) = lo(a, b);
        if (i < ni - 1) op.matrix.at(2 * i + a, 2 * (i + 1) + b) = hi(a, b);
      }
  }
  return op;
}

DiscreteOperator assemble_L(const WaveProfile& p) {
  return assemble_operator(p.grid, p.params.A(), p.c, reaction_blocks(p));
}

DiscreteOperator assemble_L_adjoint(const WaveProfile& p) {
  auto b = reaction_blocks(p);
  for (auto& m : b) m.transposeInPlace();
  return assemble_operator(p.grid, p.params.A().transpose(), -p.c, b);
}

double adjoint_transpose_difference(const DiscreteOperator& L, const DiscreteOperator& Ladj) {
  const int n = L.matrix.size();
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j)
      d = std::max(d, std::abs(Ladj.matrix.at(i, j) - L.matrix.at(j, i)));
  return d;
}

namespace {

BandedLU<double> robust_lu(const BandedMatrix<double>& M) {
  BandedLU<double> lu(M);
  if (lu.ok()) return lu;
  BandedMatrix<double> S = M;
  const double eps = 1e-14 * std::max(1.0, M.max_abs_row_sum());
  for (int i = 0; i < S.size(); ++i) S.at(i, i) += eps;
  BandedLU<double> lu2(S);
  if (!lu2.ok()) throw Error(ErrorCode::SolveFailed, "band factorization failed");
  return lu2;
}

double vnorm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

std::array<double, 2> smallest_singular_values(const BandedMatrix<double>& M, int iters) {
  const int n = M.size();
  const BandedLU<double> lu = robust_lu(M);
  std::vector<double> x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = 1.0 + 0.1 * std::sin(0.7 * i);
    x2[i] = std::cos(0.37 * i + 0.2);
  }
  auto orthonormalize = [&](std::vector<double>& a, std::vector<double>& b) {
    const double na = vnorm(a);
    for (auto& e : a) e /= na;
    double d = 0.0;
    for (int i = 0; i < n; ++i) d += a[i] * b[i];
    for (int i = 0; i < n; ++i) b[i] -= d * a[i];
    const double nb = vnorm(b);
    for (auto& e : b) e /= nb;
  };
  orthonormalize(x1, x2);
  for (int it = 0; it < iters; ++it) {
    for (auto* x : {&x1, &x2}) {
      lu.solve_in_place(*x, true);
      lu.solve_in_place(*x, false);
    }
    orthonormalize(x1, x2);
  }
  // Rayleigh-Ritz on (M^T M)^{-1} = M^{-1} M^{-T}
  auto z1 = lu.solve(x1, true), z2 = lu.solve(x2, true);
  double h11 = 0, h12 = 0, h22 = 0;
  for (int i = 0; i < n; ++i) {
    h11 += z1[i] * z1[i];
    h12 += z1[i] * z2[i];
    h22 += z2[i] * z2[i];
  }
  const double tr = h11 + h22, det = h11 * h22 - h12 * h12;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double mu1 = 0.5 * tr + disc;
  const double mu2 = std::max(det / mu1, 1e-300);
  return {1.0 / std::sqrt(mu1), 1.0 / std::sqrt(mu2)};
}

namespace {

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 3) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

AdjointNull adjoint_null_vector(const DiscreteOperator& L, const WaveProfile& p, double separation) {
  AdjointNull out;
  const int np = p.grid.n_points;
  const BandedLU<double> lu = robust_lu(L.matrix);
  std::vector<double> psi = to_interior(p.v_x);
  for (int it = 0; it < 8; ++it) {
    lu.solve_in_place(psi, true);
    const double nn = vnorm(psi);
    if (!(nn > 0.0) || !std::isfinite(nn)) throw Error(ErrorCode::SolveFailed, "adjoint inverse iteration");
    for (auto& e : psi) e /= nn;
  }
  const auto r = L.matrix.multiply_transposed(psi);
  out.residual = vnorm(r) / vnorm(psi);
  out.psi2 = from_interior(psi, np);
  const double ip = l2_inner(out.psi2, p.v_x, p.grid);
  if (ip == 0.0) throw Error(ErrorCode::DerivativeDegenerate, "adjoint vector orthogonal to kernel");
  for (auto& e : out.psi2) e /= ip;
  out.normalization = l2_inner(out.psi2, p.v_x, p.grid);

  out.sigma = smallest_singular_values(L.matrix);
  if (out.sigma[1] < separation * out.sigma[0])
    throw Error(ErrorCode::NullSpaceAmbiguous, "second singular value not separated");

  // decay on the left, boundedness on the right
  std::vector<double> xs, ys;
  const int lo = static_cast<int>(0.05 * (np - 1)), hi = static_cast<int>(0.2 * (np - 1));
  for (int j = 0; j < np; ++j) {
    const double a = out.psi2[j].norm();
    if (p.grid.x[j] < 0) out.left_sup = std::max(out.left_sup, a);
    else out.right_sup = std::max(out.right_sup, a);
  }
  std::vector<int> cand;
  for (int j = lo; j < p.split; ++j) {
    const double a = out.psi2[j].norm();
    if (a > 1e-280 && a < 1e-10 * std::max(1e-300, out.left_sup)) cand.push_back(j);
  }
  std::vector<int> pick;
  for (int j : cand)
    if (j <= hi) pick.push_back(j);
  if (pick.size() < 8) pick.assign(cand.begin(), cand.begin() + std::min<size_t>(cand.size(), std::max<size_t>(8, cand.size() / 4)));
  for (int j : pick) {
    xs.push_back(p.grid.x[j]);
    ys.push_back(std::log(out.psi2[j].norm()));
  }
  out.left_rate = log_slope(xs, ys);
  const auto em = spatial_eigenvalues(p.params, p.rest, p.c, Side::Minus, 0.0);
  double pred = INFINITY;
  for (const auto& l : em)
    if (l.real() < -1e-8) pred = std::min(pred, -l.real());
  out.left_rate_pred = pred;
  return out;
}

Field projector_Pk(const Field& r, const Field& psi2, const Field& v_x, const Grid& g) {
  const double a = l2_inner(psi2, r, g);
  Field out(v_x.size());
  for (size_t j = 0; j < v_x.size(); ++j) out[j] = a * v_x[j];
  return out;
}

CField resolvent_solve(const DiscreteOperator& L, const Field& r, cplx s) {
  const int n = L.matrix.size();
  BandedMatrix<cplx> M(n, 3, 3);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j) M.at(i, j) = -L.matrix.at(i, j);
  for (int i = 0; i < n; ++i) M.at(i, i) += s;
  BandedLU<cplx> lu(M);
  if (!lu.ok())
    throw Error(ErrorCode::SolveFailed, "singular resolvent at s = " + std::to_string(s.real()) + "+" +
                                            std::to_string(s.imag()) + "i");
  const auto ri = to_interior(r);
  std::vector<cplx> b(ri.begin(), ri.end());
  lu.solve_in_place(b);
  return from_interior_c(b, L.grid.n_points);
}

namespace {

double complex_weighted_norm(const CField& v, const WeightedNormSpec& spec, const Grid& g) {
  Field re(v.size()), im(v.size());
  for (size_t j = 0; j < v.size(); ++j) {
    re[j] = v[j].real();
    im[j] = v[j].imag();
  }
  const double a = weighted_norm(re, spec, g, Exec::Serial);
  const double b = weighted_norm(im, spec, g, Exec::Serial);
  return std::hypot(a, b);
}

}  // namespace

std::vector<ResolventRow> resolvent_probe(const DiscreteOperator& L, const Field& r,
                                          const std::vector<cplx>& s_path, double k, double mu,
                                          const Field& psi2, const Field& v_x, Exec exec) {
  const Grid& g = L.grid;
  const Field Pr = projector_Pk(r, psi2, v_x, g);
  Field Qr(r.size());
  for (size_t j = 0; j < r.size(); ++j) Qr[j] = r[j] - Pr[j];
  const double nP = weighted_norm(Pr, {k, 0}, g);
  const double nQ = weighted_norm(Qr, {k + 1.0 + mu, 0}, g);
  std::vector<ResolventRow> rows(s_path.size());
  const long long ns = static_cast<long long>(s_path.size());
  std::vector<std::string> errors(ns);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (long long i = 0; i < ns; ++i) {
    try {
      const CField v = resolvent_solve(L, r, s_path[i]);
      rows[i] = {s_path[i], complex_weighted_norm(v, {k, 1}, g), nP, nQ, nQ};
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorCode::SolveFailed, e);
  return rows;
}

std::pair<int, int> morse_counts(const LimitMatrices& lm, cplx s) {
  const auto em = eigens_4x4(lm.M(Side::Minus, s));
  const auto ep = eigens_4x4(lm.M(Side::Plus, s));
  int un = 0, st = 0;
  for (const auto& l : em)
    if (l.real() > 1e-10) ++un;
  for (const auto& l : ep)
    if (l.real() < -1e-10) ++st;
  return {un, st};
}

PointSpectrumReport point_spectrum_probe(const DiscreteOperator& L, const LimitMatrices& lm,
                                         const std::vector<SpectralCurve>& curves,
                                         const SpectrumBox& box, const ProbeOptions& opt, Exec exec) {
  PointSpectrumReport rep;
  const int n = L.matrix.size();
  std::vector<cplx> shifts;
  for (int a = 0; a < box.n_re; ++a)
    for (int b = 0; b < box.n_im; ++b) {
      const double re = box.n_re > 1 ? box.re_min + (box.re_max - box.re_min) * a / (box.n_re - 1)
                                     : 0.5 * (box.re_min + box.re_max);
      const double im = box.n_im > 1 ? box.im_min + (box.im_max - box.im_min) * b / (box.n_im - 1)
                                     : 0.5 * (box.im_min + box.im_max);
      shifts.push_back({re, im});
    }
  BandedMatrix<cplx> Lc(n, 3, 3);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j) Lc.at(i, j) = L.matrix.at(i, j);
  const long long ns = static_cast<long long>(shifts.size());
  std::vector<std::optional<std::pair<cplx, double>>> found(ns);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (long long k = 0; k < ns; ++k) {
    BandedMatrix<cplx> M = Lc;
    for (int i = 0; i < n; ++i) M.at(i, i) -= shifts[k];
    BandedLU<cplx> lu(M);
    if (!lu.ok()) {
      found[k] = std::make_pair(shifts[k], 0.0);
      continue;
    }
    std::vector<cplx> x(n);
    for (int i = 0; i < n; ++i) x[i] = cplx(std::sin(0.37 * i + 0.1), std::cos(0.91 * i));
    cplx lam = shifts[k];
    double res = INFINITY;
    for (int it = 0; it < opt.inverse_iters; ++it) {
      lu.solve_in_place(x);
      double nn = 0.0;
      for (const auto& e : x) nn += std::norm(e);
      nn = std::sqrt(nn);
      if (!(nn > 0.0) || !std::isfinite(nn)) break;
      for (auto& e : x) e /= nn;
      const auto Lx = Lc.multiply(x);
      cplx rq = 0.0;
      for (int i = 0; i < n; ++i) rq += std::conj(x[i]) * Lx[i];
      double rr = 0.0;
      for (int i = 0; i < n; ++i) rr += std::norm(Lx[i] - rq * x[i]);
      lam = rq;
      res = std::sqrt(rr);
      if (res < 1e-9 * (1.0 + std::abs(lam))) break;
    }
    if (res < 1e-6 * (1.0 + std::abs(lam))) found[k] = std::make_pair(lam, res);
  }
  for (const auto& f : found) {
    if (!f) continue;
    const cplx s = f->first;
    if (s.real() < box.re_min || s.real() > box.re_max || s.imag() < box.im_min || s.imag() > box.im_max)
      continue;
    bool dup = false;
    for (const auto& c : rep.candidates)
      if (std::abs(c.s - s) < 1e-6 * (1.0 + std::abs(s))) dup = true;
    if (dup) continue;
    PointCandidate pc;
    pc.s = s;
    pc.residual = f->second;
    pc.curve_distance = INFINITY;
    for (const auto& cv : curves)
      for (const auto& z : cv.s) pc.curve_distance = std::min(pc.curve_distance, std::abs(z - s));
    const auto [un, st] = morse_counts(lm, s);
    pc.morse_ok = un == 2 && st == 2;
    pc.kernel = std::abs(s) < opt.kernel_tol;
    pc.artifact = !pc.kernel && (!pc.morse_ok || pc.curve_distance < opt.artifact_radius);
    pc.violation = !pc.kernel && !pc.artifact && s.real() >= -opt.beta_E;
    if (pc.violation) ++rep.violations;
    rep.candidates.push_back(pc);
  }
  std::sort(rep.candidates.begin(), rep.candidates.end(),
            [](const PointCandidate& a, const PointCandidate& b) { return a.s.real() > b.s.real(); });

  auto kernel_dim = [&](const std::array<double, 2>& sv, double scale) {
    if (sv[0] > 1e-6 * scale) return 0;
    return sv[1] >= opt.gap * sv[0] ? 1 : 2;
  };
  const double nrm = L.matrix.max_abs_row_sum();
  rep.sigma_L = smallest_singular_values(L.matrix);
  rep.dim_ker = kernel_dim(rep.sigma_L, nrm);
  rep.sigma_L2 = smallest_singular_values(band_product(L.matrix, L.matrix));
  rep.dim_ker2 = kernel_dim(rep.sigma_L2, nrm * nrm);
  return rep;
}

}  // namespace tofwave
