#pragma once

// Closed-form linear-Gaussian inverse problem: prior N(0, sigma_u),
// likelihood N(K u, sigma_f). Everything here is an explicit matrix.

#include <span>
#include <string>
#include <vector>

#include "biflow/linalg.hpp"
#include "biflow/sample_batch.hpp"

namespace biflow {

struct GaussianLinearProblem {
  Matrix k;        // m x n forward operator
  Matrix sigma_u;  // n x n prior covariance
  Matrix sigma_f;  // m x m noise covariance

  std::size_t n() const noexcept { return k.cols(); }
  std::size_t m() const noexcept { return k.rows(); }
  BlockSplit split() const noexcept { return {n(), m()}; }

  /// Checks shapes, symmetry and positive definiteness of both covariances.
  void validate() const;

  /// K with sigma_u = I and sigma_f = noise^2 I.
  static GaussianLinearProblem isotropic(const Matrix& k, double noise);
};

/// [[S_U, S_U K^T], [K S_U, K S_U K^T + S_F]].
Matrix joint_covariance(const GaussianLinearProblem& p);

struct PosteriorMoments {
  Vector mean;
  Matrix cov;
};

/// cov = (K^T S_F^-1 K + S_U^-1)^-1, mean = cov K^T S_F^-1 f.
PosteriorMoments posterior_moments(const GaussianLinearProblem& p, std::span<const double> f);

/// Matrix form of the triangular transports and of the bidirectional pair.
/// f_check is the lower square root of the joint covariance, f_hat the upper
/// one; s maps (u, y) to (x', f) and r = s^-1 maps (x, f) to (u, y').
struct GaussianMaps {
  BlockSplit split;
  Matrix f_check;
  Matrix f_hat;
  Matrix s;
  Matrix r;
  Matrix sigma_post;
  /// max |r_formula - inverse(s)| / max(1, max |inverse(s)|).
  double r_formula_deviation = 0.0;
  /// False when the explicit formula for r disagreed with inverse(s) beyond
  /// 1e-8; r then holds the numerical inverse.
  bool r_formula_used = true;
};

GaussianMaps build_maps(const GaussianLinearProblem& p);

/// Same construction from a partitioned joint covariance of (u, f), as used
/// for empirically fitted Gaussians where no operator K is available.
GaussianMaps build_maps_from_joint(const Matrix& joint_cov, BlockSplit split);

struct SweepRow {
  double sigma;
  double kappa_lower;  // kappa(f_check)
  double kappa_upper;  // kappa(f_hat)
  double kappa_s;
};

/// One row per noise level with sigma_f = sigma^2 I substituted.
std::vector<SweepRow> condition_sweep(const Matrix& k, const Matrix& sigma_u,
                                      std::span<const double> sigmas);

/// Header sigma,kappa_lower,kappa_upper,kappa_s.
void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace biflow
