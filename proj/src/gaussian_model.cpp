#include "biflow/gaussian_model.hpp"

#include <algorithm>
#include <cmath>

#include "biflow/error.hpp"
#include "biflow/io.hpp"
#include "biflow/parallel.hpp"

namespace biflow {

namespace {

Matrix symmetrized(const Matrix& a) {
  Matrix s = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s(i, j) = s(j, i) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

// Upper factor P of the posterior covariance (P P^T = S_post) computed from
// the stacked whitened operator so that no ill-conditioned product is formed.
Matrix posterior_upper_factor(const Matrix& k, const Matrix& lu, const Matrix& lf) {
  const std::size_t n = k.cols(), m = k.rows();
  Matrix g(m + n, n);
  g.set_block(0, 0, solve_triangular(lf, k, Triangle::Lower));
  g.set_block(m, 0, inverse_triangular(lu, Triangle::Lower));
  // lower_gram_sqrt(g^T) = L with L L^T = g^T g = S_post^-1, so P = L^-T.
  const Matrix l = lower_gram_sqrt(g.transpose());
  return inverse_triangular(l.transpose(), Triangle::Upper);
}

void settle_r(GaussianMaps& maps, const Matrix& r_formula) {
  const Matrix r_numeric = inverse(maps.s);
  maps.r_formula_deviation =
      max_abs_diff(r_formula, r_numeric) / std::max(1.0, r_numeric.max_abs());
  maps.r_formula_used = maps.r_formula_deviation <= 1e-8;
  maps.r = maps.r_formula_used ? r_formula : r_numeric;
}

}  // namespace

void GaussianLinearProblem::validate() const {
  require(sigma_u.is_square() && sigma_u.rows() == n(), ErrorCode::DimensionMismatch,
          "prior covariance must be n x n");
  require(sigma_f.is_square() && sigma_f.rows() == m(), ErrorCode::DimensionMismatch,
          "noise covariance must be m x m");
  require(n() > 0 && m() > 0, ErrorCode::DimensionMismatch, "empty forward operator");
  (void)cholesky_lower(sigma_u);
  (void)cholesky_lower(sigma_f);
}

GaussianLinearProblem GaussianLinearProblem::isotropic(const Matrix& k, double noise) {
  require(noise > 0.0, ErrorCode::InvalidArgument, "noise level must be positive");
  return {k, Matrix::identity(k.cols()), Matrix::identity(k.rows()) * (noise * noise)};
}

Matrix joint_covariance(const GaussianLinearProblem& p) {
  p.validate();
  const Matrix su_kt = p.sigma_u * p.k.transpose();
  const Matrix bottom = p.k * su_kt + p.sigma_f;
  return symmetrized(hstack_vstack(p.sigma_u, su_kt, su_kt.transpose(), bottom));
}

PosteriorMoments posterior_moments(const GaussianLinearProblem& p, std::span<const double> f) {
  p.validate();
  require(f.size() == p.m(), ErrorCode::DimensionMismatch, "measurement has wrong length");
  const Matrix lu = cholesky_lower(p.sigma_u);
  const Matrix lf = cholesky_lower(p.sigma_f);
  const Matrix pu = posterior_upper_factor(p.k, lu, lf);
  PosteriorMoments out;
  out.cov = symmetrized(pu * pu.transpose());
  // K^T S_F^-1 f via two triangular solves.
  const Vector w = solve_triangular(lf.transpose(), solve_triangular(lf, f, Triangle::Lower),
                                    Triangle::Upper);
  out.mean = out.cov * (p.k.transpose() * w);
  return out;
}

GaussianMaps build_maps(const GaussianLinearProblem& p) {
  p.validate();
  const std::size_t n = p.n(), m = p.m();
  const Matrix lu = cholesky_lower(p.sigma_u);
  const Matrix lf = cholesky_lower(p.sigma_f);
  const Matrix klu = p.k * lu;

  GaussianMaps maps;
  maps.split = p.split();
  maps.f_check = hstack_vstack(lu, zeros(n, m), klu, lf);

  // f_hat = [[P, C], [0, B]] with P P^T = S_post, B B^T = K S_U K^T + S_F and
  // C = S_U K^T B^-T. B comes from the factor [K L_U, L_F] directly.
  const Matrix pu = posterior_upper_factor(p.k, lu, lf);
  Matrix stacked(m, n + m);
  stacked.set_block(0, 0, klu);
  stacked.set_block(0, n, lf);
  const Matrix b = upper_gram_sqrt(stacked);
  const Matrix c = solve_triangular(b, p.k * p.sigma_u, Triangle::Upper).transpose();
  maps.f_hat = hstack_vstack(pu, c, zeros(m, n), b);
  maps.sigma_post = symmetrized(pu * pu.transpose());

  // s = [[P^T S_U^-1, -P^T K^T L_F^-T], [K, L_F]].
  const Matrix lu_inv = inverse_triangular(lu, Triangle::Lower);
  const Matrix su_inv = lu_inv.transpose() * lu_inv;
  const Matrix lf_inv_k = solve_triangular(lf, p.k, Triangle::Lower);
  const Matrix pt = pu.transpose();
  maps.s = hstack_vstack(pt * su_inv, (pt * lf_inv_k.transpose()) * -1.0, p.k, lf);

  // r = [[P, S_post K^T S_F^-1], [-L_F^-1 K P, L_F^T (S_F + K S_U K^T)^-1]].
  const Matrix lf_inv = inverse_triangular(lf, Triangle::Lower);
  const Matrix sf_inv = lf_inv.transpose() * lf_inv;
  const Matrix b_inv = inverse_triangular(b, Triangle::Upper);
  const Matrix m_inv = b_inv.transpose() * b_inv;
  const Matrix r_formula = hstack_vstack(pu, maps.sigma_post * p.k.transpose() * sf_inv,
                                         (lf_inv_k * pu) * -1.0, lf.transpose() * m_inv);
  settle_r(maps, r_formula);
  return maps;
}

GaussianMaps build_maps_from_joint(const Matrix& joint_cov, BlockSplit split) {
  require(joint_cov.is_square() && joint_cov.rows() == split.total(), ErrorCode::DimensionMismatch,
          "joint covariance does not match the block split");
  const std::size_t n = split.n, m = split.m;
  GaussianMaps maps;
  maps.split = split;
  maps.f_check = cholesky_lower(joint_cov);
  maps.f_hat = cholesky_upper(joint_cov);

  const Matrix a = maps.f_check.block(0, 0, n, n);
  const Matrix cl = maps.f_check.block(n, 0, m, n);
  const Matrix d = maps.f_check.block(n, n, m, m);
  const Matrix pu = maps.f_hat.block(0, 0, n, n);
  const Matrix c = maps.f_hat.block(0, n, n, m);
  const Matrix b = maps.f_hat.block(n, n, m, m);

  // Likelihood mean operator and posterior gain.
  const Matrix k_eff = solve_triangular(a.transpose(), cl.transpose(), Triangle::Upper).transpose();
  const Matrix gain = solve_triangular(b.transpose(), c.transpose(), Triangle::Lower).transpose();

  const Matrix s11 = solve_triangular(pu, Matrix::identity(n) - gain * k_eff, Triangle::Upper);
  const Matrix s12 = solve_triangular(pu, gain * d, Triangle::Upper) * -1.0;
  maps.s = hstack_vstack(s11, s12, k_eff, d);

  const Matrix r21 = solve_triangular(d, k_eff * pu, Triangle::Lower) * -1.0;
  const Matrix r22 = solve_triangular(d, Matrix::identity(m) - k_eff * gain, Triangle::Lower);
  settle_r(maps, hstack_vstack(pu, gain, r21, r22));
  maps.sigma_post = symmetrized(pu * pu.transpose());
  return maps;
}

std::vector<SweepRow> condition_sweep(const Matrix& k, const Matrix& sigma_u,
                                      std::span<const double> sigmas) {
  for (double s : sigmas)
    require(s > 0.0 && std::isfinite(s), ErrorCode::InvalidArgument, "noise levels must be positive");
  std::vector<SweepRow> rows(sigmas.size());
  parallel_for(sigmas.size(), [&](std::size_t i) {
    const double sigma = sigmas[i];
    const GaussianLinearProblem p{k, sigma_u, Matrix::identity(k.rows()) * (sigma * sigma)};
    const GaussianMaps maps = build_maps(p);
    rows[i] = {sigma, condition_number_2(maps.f_check), condition_number_2(maps.f_hat),
               condition_number_2(maps.s)};
  });
  return rows;
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
  std::string text = "sigma,kappa_lower,kappa_upper,kappa_s\n";
  for (const auto& r : rows)
    text += format_double(r.sigma) + ',' + format_double(r.kappa_lower) + ',' +
            format_double(r.kappa_upper) + ',' + format_double(r.kappa_s) + '\n';
  write_text(path, text);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "grid needs at least one point");
  require(lo > 0.0 && hi >= lo, ErrorCode::InvalidArgument, "log grid needs 0 < lo <= hi");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace biflow
