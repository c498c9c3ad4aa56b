#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tofwave/gridw.hpp"
#include "tofwave/model.hpp"
#include "tofwave/types.hpp"

namespace tofwave {

struct ProfileOptions {
  double tol = 1e-10;
  int max_iter = 60;
  int polish_iters = 2;
  double template_width = 1.0;
  double template_center = 0.0;
  double c0 = 1.0;
  double gauge_angle = 0.0;
  double boundary_tol = 1e-6;
  bool check_boundary = true;
};

// Extra forcing added to the stationary equation (manufactured solutions).
struct ManufacturedSource {
  Field forcing;
  double phase_offset = 0.0;
};

// Everything that defines the discrete stationary problem.
class ProfileProblem {
 public:
  ProfileProblem(ModelParams params, Grid grid, ProfileOptions opt = {});

  const ModelParams& params() const { return params_; }
  const RestState& rest() const { return rest_; }
  const Grid& grid() const { return grid_; }
  const ProfileOptions& options() const { return opt_; }
  const Vec2& v_inf() const { return v_inf_; }
  int split() const { return split_; }
  Mat2 S_omega() const { return rest_.S_omega(); }

  // Far-field limit at node j: 0 left of the split, v_inf right of it.
  Vec2 limit(int j) const { return j >= split_ ? v_inf_ : Vec2::Zero(); }
  Vec2 tmpl(int j) const;
  Vec2 tmpl_x(int j) const;
  Vec2 tmpl_xx(int j) const;

  // (S_omega + g(|v|^2)) v with v = limit + dev, tail-accurate on the right.
  Vec2 reaction(int j, const Vec2& dev) const;
  // Jacobian of reaction() with respect to dev.
  Mat2 reaction_jacobian(int j, const Vec2& dev) const;

  void set_source(std::optional<ManufacturedSource> s) { source_ = std::move(s); }
  const std::optional<ManufacturedSource>& source() const { return source_; }

 private:
  ModelParams params_;
  RestState rest_;
  Grid grid_;
  ProfileOptions opt_;
  Vec2 v_inf_;
  int split_ = 0;
  std::optional<ManufacturedSource> source_;
};

struct TailRates {
  double left = 0.0, right = 0.0;            // fitted decay rates (positive)
  double left_pred = 0.0, right_pred = 0.0;  // from spatial eigenvalues at s = 0
  int left_samples = 0, right_samples = 0;
  bool left_ok = false, right_ok = false;    // within 10%
};

struct WaveProfile {
  Grid grid;
  ModelParams params;
  RestState rest;
  ProfileOptions options;
  Vec2 v_inf = Vec2::Zero();
  int split = 0;
  Field dev;      // v_star - limit
  Field v_star;
  Field v_x;      // discrete kernel vector of the linearization
  Field v_x_fd;   // centered-difference derivative, for comparison
  double c = 0.0;
  double omega = 0.0;
  double residual_norm = 0.0;
  double tangent_dc = 0.0;  // dc/dtau along the translation family
  int iterations = 0;
  TailRates tail_rates;

  Vec2 limit(int j) const { return j >= split ? v_inf : Vec2::Zero(); }
};

struct ProfileResidual {
  Field pde;  // zero at the two boundary nodes
  double phase = 0.0;
  double sup_norm = 0.0;
};

ProfileResidual assemble_profile_residual(const ProfileProblem& prob, const Field& v, double c);
ProfileResidual assemble_profile_residual_dev(const ProfileProblem& prob, const Field& dev,
                                              double c);

// Default guess is the template itself with speed opt.c0.
WaveProfile solve_profile(const ProfileProblem& prob, const Field* initial_dev = nullptr,
                          std::optional<double> c_guess = std::nullopt);
WaveProfile solve_profile(const ModelParams& params, const Grid& grid, const ProfileOptions& opt = {});

// Re-solve with the phase template moved to `center`, warm-started from `base`.
WaveProfile resolve_shifted(const WaveProfile& base, double center);

// Manufactured forcing making `target` (with speed c) an exact discrete solution.
ManufacturedSource manufactured_source(const ProfileProblem& prob, const Field& target_dev, double c);
// Twisted tanh front used as a manufactured target, returned as deviation from the limit.
Field twisted_front_dev(const ProfileProblem& prob, double width, double twist);

TailRates fit_tail_rates(const WaveProfile& p);

struct ContinuationResult {
  std::vector<WaveProfile> family;
  std::vector<double> params_t;
  bool completed = true;
  std::string failure;
};

ContinuationResult continue_profile(const WaveProfile& start, const ModelParams& target,
                                    int n_steps, double min_step = 1e-4);

}  // namespace tofwave
