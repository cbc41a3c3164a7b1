#include <gtest/gtest.h>

#include <cmath>

#include "biflow/error.hpp"
#include "biflow/gaussian_model.hpp"
#include "biflow/io.hpp"
#include "biflow/random.hpp"
#include "test_support.hpp"

using namespace biflow;
using biflow::testing::max_abs_diff;
using biflow::testing::TempDir;

namespace {

// 2x2 helpers written out by hand, independent of the library factorizations.
Matrix inv2(const Matrix& a) {
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return Matrix{{a(1, 1) / det, -a(0, 1) / det}, {-a(1, 0) / det, a(0, 0) / det}};
}

// U U^T = a with U upper triangular.
Matrix upper_chol2(const Matrix& a) {
  const double c = std::sqrt(a(1, 1));
  const double b = a(0, 1) / c;
  return Matrix{{std::sqrt(a(0, 0) - b * b), b}, {0.0, c}};
}

GaussianLinearProblem skewed_problem() {
  return {Matrix{{2.0, 1.0}, {1.0, 2.0}}, Matrix{{1.0, 0.3}, {0.3, 2.0}}, Matrix{{0.25, 0.0}, {0.0, 0.5}}};
}

struct Oracle {
  Matrix sigma_post, gain, m;
};

Oracle oracle(const GaussianLinearProblem& p) {
  const Matrix kt = p.k.transpose();
  Oracle o;
  o.sigma_post = inv2(kt * inv2(p.sigma_f) * p.k + inv2(p.sigma_u));
  o.m = p.k * p.sigma_u * kt + p.sigma_f;
  o.gain = p.sigma_u * kt * inv2(o.m);
  return o;
}

}  // namespace

TEST(GaussianModel, PosteriorMomentsMatchClosedForm) {
  const auto p = skewed_problem();
  const Oracle o = oracle(p);
  const Vector f{1.0, -0.5};
  const PosteriorMoments pm = posterior_moments(p, f);
  const Vector mean = o.sigma_post * (p.k.transpose() * (inv2(p.sigma_f) * f));
  EXPECT_LT(max_abs_diff(pm.mean, mean), 1e-13);
  EXPECT_LT(max_abs_diff(pm.cov, o.sigma_post), 1e-13);
  // the gain form gives the same mean
  EXPECT_LT(max_abs_diff(pm.mean, o.gain * f), 1e-13);
}

TEST(GaussianModel, IsotropicPosteriorHandWorked) {
  // K symmetric with eigenvalues 3 and 1, sigma = 0.5: S_post = (4 K^2 + I)^-1.
  const auto p = GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 0.5);
  const PosteriorMoments pm = posterior_moments(p, Vector{1.0, 1.0});
  // along (1,1)/sqrt2: variance 1/37, mean 4*3/37 * (1,1)
  // along (1,-1)/sqrt2: variance 1/5
  const double a = 1.0 / 37.0, b = 1.0 / 5.0;
  EXPECT_NEAR(pm.cov(0, 0), 0.5 * (a + b), 1e-14);
  EXPECT_NEAR(pm.cov(0, 1), 0.5 * (a - b), 1e-14);
  EXPECT_NEAR(pm.mean[0], 12.0 / 37.0, 1e-14);
  EXPECT_NEAR(pm.mean[1], 12.0 / 37.0, 1e-14);
}

TEST(GaussianModel, FactorsAreTriangularSquareRoots) {
  const auto p = skewed_problem();
  const GaussianMaps maps = build_maps(p);
  const Matrix joint = joint_covariance(p);
  const Oracle o = oracle(p);
  EXPECT_LT(max_abs_diff(joint.block(2, 2, 2, 2), o.m), 1e-14);
  EXPECT_LT(max_abs_diff(joint.block(0, 2, 2, 2), p.sigma_u * p.k.transpose()), 1e-14);
  EXPECT_LT(relative_frobenius_error(maps.f_check * maps.f_check.transpose(), joint), 1e-14);
  EXPECT_LT(relative_frobenius_error(maps.f_hat * maps.f_hat.transpose(), joint), 1e-14);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      EXPECT_EQ(maps.f_check(i, j), 0.0);
      EXPECT_EQ(maps.f_hat(j, i), 0.0);
    }
  EXPECT_LT(max_abs_diff(maps.sigma_post, o.sigma_post), 1e-13);
}

TEST(GaussianModel, SMatchesCompositionOracle) {
  const auto p = skewed_problem();
  const GaussianMaps maps = build_maps(p);
  const Oracle o = oracle(p);
  const Matrix pu = upper_chol2(o.sigma_post);
  const Matrix lf{{0.5, 0.0}, {0.0, std::sqrt(0.5)}};
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector u{rng.normal(), rng.normal()}, y{rng.normal(), rng.normal()};
    // likelihood push of y given u, then the posterior factor pulled back at u
    const Vector f = axpy(1.0, p.k * u, lf * y);
    const Vector x = inv2(pu) * axpy(-1.0, o.gain * f, u);
    const Vector s = maps.s * Vector{u[0], u[1], y[0], y[1]};
    EXPECT_LT(max_abs_diff(s, Vector{x[0], x[1], f[0], f[1]}), 1e-12);
  }
  EXPECT_LT(max_abs_diff(maps.r * maps.s, Matrix::identity(4)), 1e-12);
  EXPECT_TRUE(maps.r_formula_used);
  EXPECT_LT(maps.r_formula_deviation, 1e-12);
}

TEST(GaussianModel, SPushesPriorTimesReferenceToReferenceTimesMarginal) {
  const auto p = skewed_problem();
  const GaussianMaps maps = build_maps(p);
  Matrix in(4, 4);
  in.set_block(0, 0, p.sigma_u);
  in.set_block(2, 2, Matrix::identity(2));
  Matrix want(4, 4);
  want.set_block(0, 0, Matrix::identity(2));
  want.set_block(2, 2, oracle(p).m);
  EXPECT_LT(max_abs_diff(maps.s * in * maps.s.transpose(), want), 1e-12);
}

TEST(GaussianModel, JointConstructionAgreesWithOperatorConstruction) {
  const auto p = skewed_problem();
  const GaussianMaps a = build_maps(p);
  const GaussianMaps b = build_maps_from_joint(joint_covariance(p), p.split());
  EXPECT_LT(max_abs_diff(a.s, b.s), 1e-12);
  EXPECT_LT(max_abs_diff(a.r, b.r), 1e-12);
  EXPECT_LT(max_abs_diff(a.f_hat, b.f_hat), 1e-12);
  EXPECT_LT(max_abs_diff(a.f_check, b.f_check), 1e-12);
}

TEST(GaussianModel, ConditionNumbersOfFactorsAgreeAcrossSweep) {
  const Matrix k{{2.0, 1.0}, {1.0, 2.0}};
  const auto sigmas = log_grid(1e-6, 1.0, 50);
  ASSERT_EQ(sigmas.front(), 1e-6);
  ASSERT_EQ(sigmas.back(), 1.0);
  for (const SweepRow& r : condition_sweep(k, Matrix::identity(2), sigmas)) {
    EXPECT_LT(std::abs(r.kappa_lower - r.kappa_upper) / r.kappa_lower, 1e-8) << "sigma " << r.sigma;
    if (r.sigma <= 2e-3) {
      EXPECT_GE(r.kappa_lower, 1e3);
    }
    if (r.sigma <= 1e-2) {
      EXPECT_LE(std::abs(r.kappa_s - 3.0), 10.0 * r.sigma);
    }
  }
}

TEST(GaussianModel, SmallNoiseLimitOfS) {
  const auto p = GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 1e-7);
  const GaussianMaps maps = build_maps(p);
  EXPECT_LT(maps.s.block(0, 0, 2, 2).max_abs(), 1e-6);
  EXPECT_LT(maps.s.block(2, 2, 2, 2).max_abs(), 1e-6);
  EXPECT_EQ(maps.s.block(2, 0, 2, 2), p.k);
  const Matrix q = maps.s.block(0, 2, 2, 2) * -1.0;
  EXPECT_LT(max_abs_diff(q.transpose() * q, Matrix::identity(2)), 1e-6);
}

TEST(GaussianModel, ValidationErrors) {
  const Matrix k{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_THROW(GaussianLinearProblem::isotropic(k, 0.0), Error);
  try {
    build_maps({k, Matrix{{1.0, 2.0}, {2.0, 1.0}}, Matrix::identity(2)});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
  try {
    build_maps({k, Matrix::identity(3), Matrix::identity(2)});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(log_grid(0.0, 1.0, 3), Error);
  EXPECT_THROW(log_grid(1.0, 2.0, 0), Error);
}

TEST(GaussianModel, SweepCsvFormat) {
  TempDir dir("sweep");
  const auto rows = condition_sweep(Matrix{{2.0, 1.0}, {1.0, 2.0}}, Matrix::identity(2), log_grid(0.1, 1.0, 3));
  write_sweep_csv(dir / "s.csv", rows);
  const std::string text = read_text(dir / "s.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "sigma,kappa_lower,kappa_upper,kappa_s");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
