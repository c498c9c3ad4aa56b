#include "tofwave/profile.hpp"

#include <algorithm>
#include <cmath>

#include "tofwave/banded.hpp"
#include "tofwave/errors.hpp"
#include "tofwave/spectral.hpp"

namespace tofwave {

ProfileProblem::ProfileProblem(ModelParams params, Grid grid, ProfileOptions opt)
    : params_(std::move(params)), rest_(solve_rest_state(params_)), grid_(std::move(grid)),
      opt_(opt) {
  v_inf_ = rotation(opt_.gauge_angle) * rest_.v_inf;
  split_ = grid_.nearest_index(opt_.template_center);
  split_ = std::clamp(split_, 1, grid_.n_points - 1);
}

namespace {
// 1/(1+e^{-2y}) and its complement without cancellation.
double logistic(double y) { return 1.0 / (1.0 + std::exp(-2.0 * y)); }
double logistic_c(double y) { return 1.0 / (1.0 + std::exp(2.0 * y)); }
}  // namespace

Vec2 ProfileProblem::tmpl(int j) const {
  return logistic((grid_.x[j] - opt_.template_center) / opt_.template_width) * v_inf_;
}

Vec2 ProfileProblem::tmpl_x(int j) const {
  const double y = (grid_.x[j] - opt_.template_center) / opt_.template_width;
  const double s = logistic(y), sc = logistic_c(y);
  return (2.0 * s * sc / opt_.template_width) * v_inf_;
}

Vec2 ProfileProblem::tmpl_xx(int j) const {
  const double y = (grid_.x[j] - opt_.template_center) / opt_.template_width;
  const double s = logistic(y), sc = logistic_c(y);
  const double w = opt_.template_width;
  return (4.0 * s * sc * (sc - s) / (w * w)) * v_inf_;
}

Vec2 ProfileProblem::reaction(int j, const Vec2& dev) const {
  if (j >= split_) {
    // g(r_inf) + S_omega vanishes identically, only the increment survives.
    const Vec2 v = v_inf_ + dev;
    const double delta = 2.0 * v_inf_.dot(dev) + dev.squaredNorm();
    return rotmat(params_.increment(rest_.r_inf, delta)) * v;
  }
  return (rest_.S_omega() + rotmat(params_.G(dev.squaredNorm()))) * dev;
}

Mat2 ProfileProblem::reaction_jacobian(int j, const Vec2& dev) const {
  if (j >= split_) {
    const Vec2 v = v_inf_ + dev;
    const double delta = 2.0 * v_inf_.dot(dev) + dev.squaredNorm();
    const double r = rest_.r_inf + delta;
    return rotmat(params_.increment(rest_.r_inf, delta)) +
           2.0 * rotmat(params_.dG(r)) * (v * v.transpose());
  }
  const double r = dev.squaredNorm();
  return rest_.S_omega() + rotmat(params_.G(r)) + 2.0 * rotmat(params_.dG(r)) * (dev * dev.transpose());
}

namespace {

struct Layout {
  static int d(int j, int a) { return 4 * j + a; }
  static int c(int j) { return 4 * j + 2; }
  static int I(int j) { return 4 * j + 3; }
};

Vec2 node_dev(const std::vector<double>& X, int j) { return Vec2(X[4 * j], X[4 * j + 1]); }

Vec2 second_diff(const ProfileProblem& p, const std::vector<Vec2>& dev, int j) {
  const Vec2 raw = dev[j + 1] - 2.0 * dev[j] + dev[j - 1];
  const Vec2 jump = p.limit(j + 1) - 2.0 * p.limit(j) + p.limit(j - 1);
  return (raw + jump) / (p.grid().h * p.grid().h);
}

Vec2 first_diff(const ProfileProblem& p, const std::vector<Vec2>& dev, int j) {
  const Vec2 raw = dev[j + 1] - dev[j - 1];
  const Vec2 jump = p.limit(j + 1) - p.limit(j - 1);
  return (raw + jump) / (2.0 * p.grid().h);
}

double phase_density(const ProfileProblem& p, const Vec2& dev, int j) {
  const Grid& g = p.grid();
  return g.h * g.trap_weight(j) * (dev + p.limit(j) - p.tmpl(j)).dot(p.tmpl_x(j));
}

Vec2 pde_residual(const ProfileProblem& p, const std::vector<Vec2>& dev, double c, int j) {
  const Mat2 A = p.params().A();
  Vec2 r = A * second_diff(p, dev, j) + c * first_diff(p, dev, j) + p.reaction(j, dev[j]);
  if (p.source()) r += p.source()->forcing[j];
  return r;
}

double phase_target(const ProfileProblem& p) { return p.source() ? p.source()->phase_offset : 0.0; }

std::vector<Vec2> unpack_dev(const std::vector<double>& X, int n) {
  std::vector<Vec2> dev(n);
  for (int j = 0; j < n; ++j) dev[j] = node_dev(X, j);
  return dev;
}

std::vector<double> full_residual(const ProfileProblem& p, const std::vector<double>& X) {
  const int n = p.grid().n_points;
  const auto dev = unpack_dev(X, n);
  std::vector<double> F(4 * n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (j == 0 || j == n - 1) {
      F[Layout::d(j, 0)] = dev[j][0];
      F[Layout::d(j, 1)] = dev[j][1];
    } else {
      const Vec2 r = pde_residual(p, dev, X[Layout::c(j)], j);
      F[Layout::d(j, 0)] = r[0];
      F[Layout::d(j, 1)] = r[1];
    }
    if (j < n - 1) F[Layout::c(j)] = X[Layout::c(j + 1)] - X[Layout::c(j)];
    else F[Layout::c(j)] = X[Layout::I(j)] - phase_target(p);
    const double q = phase_density(p, dev[j], j);
    F[Layout::I(j)] = X[Layout::I(j)] - (j > 0 ? X[Layout::I(j - 1)] : 0.0) - q;
  }
  return F;
}

BandedMatrix<double> full_jacobian(const ProfileProblem& p, const std::vector<double>& X) {
  const int n = p.grid().n_points;
  const double h = p.grid().h;
  const Mat2 A = p.params().A();
  const auto dev = unpack_dev(X, n);
  BandedMatrix<double> J(4 * n, 5, 5);
  for (int j = 0; j < n; ++j) {
    if (j == 0 || j == n - 1) {
      J.at(Layout::d(j, 0), Layout::d(j, 0)) = 1.0;
      J.at(Layout::d(j, 1), Layout::d(j, 1)) = 1.0;
    } else {
      const double c = X[Layout::c(j)];
      const Mat2 off = A / (h * h);
      const Mat2 lo = off - Mat2::Identity() * (c / (2.0 * h));
      const Mat2 hi = off + Mat2::Identity() * (c / (2.0 * h));
      const Mat2 mid = -2.0 * off + p.reaction_jacobian(j, dev[j]);
      const Vec2 d1 = first_diff(p, dev, j);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          J.at(Layout::d(j, a), Layout::d(j - 1, b)) = lo(a, b);
          J.at(Layout::d(j, a), Layout::d(j, b)) = mid(a, b);
          J.at(Layout::d(j, a), Layout::d(j + 1, b)) = hi(a, b);
        }
        J.at(Layout::d(j, a), Layout::c(j)) = d1[a];
      }
    }
    if (j < n - 1) {
      J.at(Layout::c(j), Layout::c(j + 1)) = 1.0;
      J.at(Layout::c(j), Layout::c(j)) = -1.0;
    } else {
      J.at(Layout::c(j), Layout::I(j)) = 1.0;
    }
    J.at(Layout::I(j), Layout::I(j)) = 1.0;
    if (j > 0) J.at(Layout::I(j), Layout::I(j - 1)) = -1.0;
    const Vec2 tx = p.tmpl_x(j) * (h * p.grid().trap_weight(j));
    J.at(Layout::I(j), Layout::d(j, 0)) = -tx[0];
    J.at(Layout::I(j), Layout::d(j, 1)) = -tx[1];
  }
  return J;
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

double two_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

std::vector<double> pack(const ProfileProblem& p, const Field& dev, double c) {
  const int n = p.grid().n_points;
  std::vector<double> X(4 * n, 0.0);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    X[Layout::d(j, 0)] = dev[j][0];
    X[Layout::d(j, 1)] = dev[j][1];
    X[Layout::c(j)] = c;
    acc += phase_density(p, dev[j], j);
    X[Layout::I(j)] = acc;
  }
  return X;
}

Field template_dev(const ProfileProblem& p) {
  const int n = p.grid().n_points;
  Field dev(n);
  for (int j = 0; j < n; ++j) {
    const double y = (p.grid().x[j] - p.options().template_center) / p.options().template_width;
    dev[j] = j >= p.split() ? Vec2(-logistic_c(y) * p.v_inf()) : Vec2(logistic(y) * p.v_inf());
  }
  dev.front().setZero();
  dev.back().setZero();
  return dev;
}

}  // namespace

ProfileResidual assemble_profile_residual_dev(const ProfileProblem& prob, const Field& dev, double c) {
  const int n = prob.grid().n_points;
  if (static_cast<int>(dev.size()) != n) throw Error(ErrorCode::DimensionMismatch, "profile field size");
  ProfileResidual out;
  out.pde.assign(n, Vec2::Zero());
  double q = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j > 0 && j < n - 1) out.pde[j] = pde_residual(prob, dev, c, j);
    q += phase_density(prob, dev[j], j);
  }
  out.phase = q - phase_target(prob);
  out.sup_norm = std::abs(out.phase);
  for (const auto& r : out.pde) out.sup_norm = std::max(out.sup_norm, r.cwiseAbs().maxCoeff());
  return out;
}

ProfileResidual assemble_profile_residual(const ProfileProblem& prob, const Field& v, double c) {
  const int n = prob.grid().n_points;
  if (static_cast<int>(v.size()) != n) throw Error(ErrorCode::DimensionMismatch, "profile field size");
  Field dev(n);
  for (int j = 0; j < n; ++j) dev[j] = v[j] - prob.limit(j);
  return assemble_profile_residual_dev(prob, dev, c);
}

WaveProfile solve_profile(const ProfileProblem& prob, const Field* initial_dev,
                          std::optional<double> c_guess) {
  const int n = prob.grid().n_points;
  const auto& opt = prob.options();
  Field dev0 = initial_dev ? *initial_dev : template_dev(prob);
  if (static_cast<int>(dev0.size()) != n) throw Error(ErrorCode::DimensionMismatch, "initial guess size");
  std::vector<double> X = pack(prob, dev0, c_guess.value_or(opt.c0));
  std::vector<double> F = full_residual(prob, X);
  double res = sup_norm(F);
  bool converged = false;
  int polished = 0, it = 0;
  for (; it < opt.max_iter; ++it) {
    if (!all_finite(F)) throw Error(ErrorCode::NewtonDiverged, "non-finite residual");
    if (res < opt.tol) {
      converged = true;
      if (polished++ >= opt.polish_iters) break;
    }
    BandedLU<double> lu(full_jacobian(prob, X));
    if (!lu.ok()) throw Error(ErrorCode::SingularJacobian, "zero pivot in profile Jacobian");
    std::vector<double> step(F.size());
    for (size_t i = 0; i < F.size(); ++i) step[i] = -F[i];
    lu.solve_in_place(step);
    const double f0 = two_norm(F);
    double lam = 1.0;
    bool accepted = false;
    std::vector<double> Xn(X.size()), Fn;
    for (int halv = 0; halv <= 30; ++halv) {
      for (size_t i = 0; i < X.size(); ++i) Xn[i] = X[i] + lam * step[i];
      Fn = full_residual(prob, Xn);
      if (all_finite(Fn) && two_norm(Fn) <= (1.0 - 1e-4 * lam) * f0) {
        accepted = true;
        break;
      }
      lam *= 0.5;
    }
    if (!accepted) {
      if (converged) break;  // already at roundoff
      throw Error(ErrorCode::NewtonDiverged,
                  "line search failed, residual " + std::to_string(res));
    }
    X.swap(Xn);
    F.swap(Fn);
    res = sup_norm(F);
  }
  if (res < opt.tol) converged = true;
  if (!converged)
    throw Error(ErrorCode::NewtonDiverged, "no convergence, residual " + std::to_string(res));

  WaveProfile out;
  out.grid = prob.grid();
  out.params = prob.params();
  out.rest = prob.rest();
  out.options = opt;
  out.v_inf = prob.v_inf();
  out.split = prob.split();
  out.c = X[Layout::c(0)];
  out.omega = prob.rest().omega;
  out.residual_norm = res;
  out.iterations = it;
  out.dev = unpack_dev(X, n);
  out.v_star.resize(n);
  for (int j = 0; j < n; ++j) out.v_star[j] = out.dev[j] + out.limit(j);

  // Translation tangent: differentiate the converged system in the template center.
  BandedLU<double> lu(full_jacobian(prob, X));
  if (!lu.ok()) throw Error(ErrorCode::SingularJacobian, "zero pivot at converged profile");
  std::vector<double> rhs(4 * n, 0.0);
  for (int j = 0; j < n; ++j) {
    const Vec2 v = out.dev[j] + out.limit(j);
    const double w = prob.grid().h * prob.grid().trap_weight(j);
    rhs[Layout::I(j)] = w * (prob.tmpl_x(j).squaredNorm() - (v - prob.tmpl(j)).dot(prob.tmpl_xx(j)));
  }
  lu.solve_in_place(rhs);
  out.v_x.resize(n);
  for (int j = 0; j < n; ++j) out.v_x[j] = -node_dev(rhs, j);
  out.tangent_dc = rhs[Layout::c(0)];
  out.v_x_fd = first_derivative(out.v_star, out.grid);

  if (opt.check_boundary) {
    const int m = std::min(10, n / 4);
    const double left = out.dev[m].norm(), right = out.dev[n - 1 - m].norm();
    if (left > opt.boundary_tol || right > opt.boundary_tol)
      throw Error(ErrorCode::BoundaryTooTight,
                  "tail not decayed near boundary (left " + std::to_string(left) + ", right " +
                      std::to_string(right) + ")");
  }
  out.tail_rates = fit_tail_rates(out);
  return out;
}

WaveProfile solve_profile(const ModelParams& params, const Grid& grid, const ProfileOptions& opt) {
  // Restarting from v* rounds away the slowly decaying phase residue the Newton path leaves in
  // the right tail.
  const WaveProfile first = solve_profile(ProfileProblem(params, grid, opt));
  WaveProfile out = resolve_shifted(first, opt.template_center);
  out.iterations += first.iterations;
  return out;
}

WaveProfile resolve_shifted(const WaveProfile& base, double center) {
  ProfileOptions opt = base.options;
  opt.template_center = center;
  opt.check_boundary = false;
  ProfileProblem prob(base.params, base.grid, opt);
  Field dev(base.grid.n_points);
  for (int j = 0; j < base.grid.n_points; ++j) dev[j] = base.dev[j] + base.limit(j) - prob.limit(j);
  WaveProfile out = solve_profile(prob, &dev, base.c);
  out.options.check_boundary = base.options.check_boundary;
  return out;
}

Field twisted_front_dev(const ProfileProblem& prob, double width, double twist) {
  const Grid& g = prob.grid();
  Field dev(g.n_points);
  const Vec2 vi = prob.v_inf();
  for (int j = 0; j < g.n_points; ++j) {
    const double y = (g.x[j] - prob.options().template_center - 0.2) / width;
    const double th = twist / std::cosh(y);
    const Mat2 R = rotation(th);
    const double s = logistic(y), sc = logistic_c(y);
    if (j >= prob.split()) {
      const double h2 = std::sin(0.5 * th);
      const Vec2 rot_minus_id = Mat2{{-2.0 * h2 * h2, -std::sin(th)}, {std::sin(th), -2.0 * h2 * h2}} * vi;
      dev[j] = s * rot_minus_id - sc * vi;
    } else {
      dev[j] = s * (R * vi);
    }
  }
  dev.front().setZero();
  dev.back().setZero();
  return dev;
}

ManufacturedSource manufactured_source(const ProfileProblem& prob, const Field& target_dev, double c) {
  ProfileProblem bare = prob;
  bare.set_source(std::nullopt);
  const auto r = assemble_profile_residual_dev(bare, target_dev, c);
  ManufacturedSource s;
  s.forcing.resize(r.pde.size());
  for (size_t j = 0; j < r.pde.size(); ++j) s.forcing[j] = -r.pde[j];
  s.phase_offset = r.phase;
  return s;
}

namespace {

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

TailRates fit_tail_rates(const WaveProfile& p) {
  TailRates tr;
  const int n = p.grid.n_points;
  const int layer = static_cast<int>(0.05 * (n - 1));
  // Window: from where the deviation first drops below 1e-8 down ten decades,
  // which stays above the roundoff plateau left by the neutral phase mode.
  auto collect = [&](bool left) {
    std::vector<double> xs, ys;
    const int dir = left ? -1 : 1;
    bool started = false;
    for (int j = left ? p.split - 1 : p.split; j >= layer && j <= n - 1 - layer; j += dir) {
      const double v = p.dev[j].norm();
      if (!started && v < 1e-8 && v > 0.0) started = true;
      if (!started) continue;
      if (!(v > 1e-18)) break;
      xs.push_back(p.grid.x[j]);
      ys.push_back(std::log(v));
    }
    return std::make_pair(xs, ys);
  };
  const auto [xl, yl] = collect(true);
  const auto [xr, yr] = collect(false);
  tr.left_samples = static_cast<int>(xl.size());
  tr.right_samples = static_cast<int>(xr.size());
  if (xl.size() >= 3) tr.left = slope_fit(xl, yl);
  if (xr.size() >= 3) tr.right = -slope_fit(xr, yr);

  const auto em = spatial_eigenvalues(p.params, p.rest, p.c, Side::Minus, cplx(0.0));
  const auto ep = spatial_eigenvalues(p.params, p.rest, p.c, Side::Plus, cplx(0.0));
  double lp = INFINITY, rp = INFINITY;
  for (const auto& l : em)
    if (l.real() > 1e-8) lp = std::min(lp, l.real());
  for (const auto& l : ep)
    if (l.real() < -1e-8) rp = std::min(rp, -l.real());
  tr.left_pred = lp;
  tr.right_pred = rp;
  tr.left_ok = tr.left_samples >= 3 && std::abs(tr.left - lp) <= 0.1 * lp;
  tr.right_ok = tr.right_samples >= 3 && std::abs(tr.right - rp) <= 0.1 * rp;
  return tr;
}

ContinuationResult continue_profile(const WaveProfile& start, const ModelParams& target, int n_steps,
                                    double min_step) {
  ContinuationResult res;
  res.family.push_back(start);
  res.params_t.push_back(0.0);
  if (n_steps <= 0) return res;
  double t = 0.0, step = 1.0 / n_steps;
  const double tiny = min_step / n_steps;
  while (t < 1.0 - 1e-14) {
    const double tn = std::min(1.0, t + step);
    try {
      const WaveProfile& prev = res.family.back();
      ProfileProblem prob(interpolate_params(start.params, target, tn), start.grid, start.options);
      Field dev(start.grid.n_points);
      for (int j = 0; j < start.grid.n_points; ++j) dev[j] = prev.v_star[j] - prob.limit(j);
      dev.front().setZero();
      dev.back().setZero();
      res.family.push_back(solve_profile(prob, &dev, prev.c));
      res.params_t.push_back(tn);
      t = tn;
    } catch (const Error& e) {
      step *= 0.5;
      if (step < tiny) {
        res.completed = false;
        res.failure = std::string("ContinuationStalled: ") + e.what();
        return res;
      }
    }
  }
  return res;
}

}  // namespace tofwave
