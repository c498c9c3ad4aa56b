#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tofwave/banded.hpp"
#include "tofwave/kernels.hpp"
#include "tofwave/model.hpp"
#include "tofwave/profile.hpp"

namespace tofwave {

enum class Side { Minus, Plus };
const char* side_name(Side s);

using Mat4c = Eigen::Matrix4cd;

struct LimitMatrices {
  Mat2 A;
  Mat2 C_minus, C_plus;
  double c = 0.0;
  double sigma1 = 0.0, sigma2 = 0.0;

  const Mat2& C(Side s) const { return s == Side::Minus ? C_minus : C_plus; }
  // First-order spatial system u' = M(s) u for the far-field problem.
  Mat4c M(Side side, cplx s) const;
  // -nu^2 A + i nu c + C
  Eigen::Matrix2cd D(Side side, double nu) const;
};

LimitMatrices limit_matrices(const ModelParams& p, const RestState& rest, double c);

std::array<cplx, 4> eigens_4x4(const Mat4c& M);
std::array<cplx, 4> spatial_eigenvalues(const ModelParams& p, const RestState& rest, double c,
                                        Side side, cplx s);

// --- dispersion ---------------------------------------------------------

struct SpectralCurve {
  int branch_id = 0;
  Side side = Side::Plus;
  std::vector<double> nu;
  std::vector<cplx> s;
};

std::vector<SpectralCurve> dispersion_curves(const LimitMatrices& lm, const std::vector<double>& nu_grid,
                                             Exec exec = Exec::Parallel);
std::vector<double> symmetric_nu_grid(double nu_max, int n_half);
double dispersion_residual(const LimitMatrices& lm, Side side, double nu, cplx s);

// Index of the plus-side branch passing closest to the origin.
int critical_branch(const std::vector<SpectralCurve>& curves);

struct TangencyFit {
  double kappa = 0.0;
  double residual = 0.0;
  int samples = 0;
  double closest = 0.0;  // min |s| over the branch
};

TangencyFit fit_tangency(const SpectralCurve& curve, double radius = 0.1);

struct CrescentParams {
  double kappa = 0.0, gamma = 0.0, rho = 0.0, delta = 0.0;
  bool valid() const { return kappa > 0 && gamma > 0 && rho > 0 && delta > 0 && delta < rho; }
};

bool crescent_contains(cplx s, const CrescentParams& p);
// Sector without the ball restriction.
bool sector_contains(cplx s, const CrescentParams& p);
CrescentParams fit_crescent(const std::vector<SpectralCurve>& curves, double kappa_fit);

// --- critical spatial eigenvalue ---------------------------------------

struct LambdaSample {
  cplx s;
  cplx lambda;
};

struct LambdaTrack {
  std::vector<LambdaSample> samples;
  int refinements = 0;
};

LambdaTrack track_lambda(const LimitMatrices& lm, const std::vector<cplx>& s_path);
// Newton polish of the plus-side spatial eigenvalue near `guess`.
cplx refine_lambda(const LimitMatrices& lm, cplx s, cplx guess);

struct LambdaDerivatives {
  cplx lambda0;
  cplx d1, d2;
  double q = 0.0;            // -(alpha1 sigma1 + alpha2 sigma2) / (c^2 sigma1)
  double d2_expected = 0.0;  // 2q/c
};

LambdaDerivatives lambda_derivatives(const LimitMatrices& lm, const ModelParams& p, double h = 1e-3);

struct PathRatio {
  double a = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

// min/max of Re lambda / |lambda|^2 along s = i t - a t^2, 0 < t <= t_max.
PathRatio parabolic_path_ratio(const LimitMatrices& lm, double a, double t_max = 0.1, int n = 200);

// --- block matrix classifier ---------------------------------------------

struct BlockCounts {
  int stable = 0, center = 0, unstable = 0;
  bool operator==(const BlockCounts&) const = default;
};

BlockCounts classify_block_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXcd& C);
double lower_spectral_bound(const Eigen::MatrixXcd& M);

// --- discrete linearization -----------------------------------------------

// Interior-node operator, 2(N-2) unknowns interleaved per node, Dirichlet ends.
struct DiscreteOperator {
  Grid grid;
  BandedMatrix<double> matrix;
  int n_interior() const { return grid.n_points - 2; }
  int dim() const { return 2 * (grid.n_points - 2); }
  Field apply(const Field& u) const;
};

std::vector<double> to_interior(const Field& u);
Field from_interior(const std::vector<double>& v, int n_points);
CField from_interior_c(const std::vector<cplx>& v, int n_points);

// Per-node S_omega + Df(v_star), consistent with the profile solver.
std::vector<Mat2> reaction_blocks(const WaveProfile& p);

DiscreteOperator assemble_operator(const Grid& g, const Mat2& diffusion, double advection,
                                   const std::vector<Mat2>& blocks);
DiscreteOperator assemble_L(const WaveProfile& p);
DiscreteOperator assemble_L_adjoint(const WaveProfile& p);
double adjoint_transpose_difference(const DiscreteOperator& L, const DiscreteOperator& Ladj);

// Two smallest singular values by inverse subspace iteration.
std::array<double, 2> smallest_singular_values(const BandedMatrix<double>& M, int iters = 60);

struct AdjointNull {
  Field psi2;
  double residual = 0.0;         // |L^T psi| / |psi|
  double normalization = 0.0;    // (psi2, v_x)
  std::array<double, 2> sigma{};
  double left_rate = 0.0;        // fitted left decay rate of psi2
  double left_rate_pred = 0.0;
  double right_sup = 0.0, left_sup = 0.0;
};

AdjointNull adjoint_null_vector(const DiscreteOperator& L, const WaveProfile& p,
                                double separation = 10.0);

Field projector_Pk(const Field& r, const Field& psi2, const Field& v_x, const Grid& g);

struct ResolventRow {
  cplx s;
  double norm_v = 0.0, norm_Pkr = 0.0, norm_r_strong = 0.0, norm_r_complement = 0.0;
};

std::vector<ResolventRow> resolvent_probe(const DiscreteOperator& L, const Field& r,
                                          const std::vector<cplx>& s_path, double k, double mu,
                                          const Field& psi2, const Field& v_x,
                                          Exec exec = Exec::Parallel);
CField resolvent_solve(const DiscreteOperator& L, const Field& r, cplx s);

struct SpectrumBox {
  double re_min = -1.0, re_max = 0.5, im_min = -2.0, im_max = 2.0;
  int n_re = 6, n_im = 9;
};

struct PointCandidate {
  cplx s;
  double residual = 0.0;
  double curve_distance = 0.0;
  bool morse_ok = false;
  bool artifact = false;
  bool kernel = false;
  bool violation = false;
};

struct PointSpectrumReport {
  std::vector<PointCandidate> candidates;
  int dim_ker = 0, dim_ker2 = 0;
  std::array<double, 2> sigma_L{}, sigma_L2{};
  int violations = 0;
};

struct ProbeOptions {
  double artifact_radius = 0.05;
  double beta_E = 0.0;
  double kernel_tol = 1e-6;
  double gap = 1e4;
  int inverse_iters = 40;
};

PointSpectrumReport point_spectrum_probe(const DiscreteOperator& L, const LimitMatrices& lm,
                                         const std::vector<SpectralCurve>& curves,
                                         const SpectrumBox& box, const ProbeOptions& opt = {},
                                         Exec exec = Exec::Parallel);

// Morse indices: unstable count of M_-(s), stable count of M_+(s).
std::pair<int, int> morse_counts(const LimitMatrices& lm, cplx s);

}  // namespace tofwave
