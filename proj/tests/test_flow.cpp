#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "biflow/error.hpp"
#include "biflow/gaussian_model.hpp"
#include "biflow/map_io.hpp"
#include "biflow/monotone_map.hpp"
#include "biflow/random.hpp"
#include "biflow/stats.hpp"
#include "biflow/training.hpp"
#include "test_support.hpp"

using namespace biflow;
using biflow::testing::max_abs_diff;
using biflow::testing::TempDir;

namespace {

double hermite_oracle(unsigned k, double x) {
  switch (k) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return x * x - 1.0;
    case 3: return x * x * x - 3.0 * x;
    case 4: return x * x * x * x - 6.0 * x * x + 3.0;
    default: return std::nan("");
  }
}

// Brute-force component value: basis products from the closed-form Hermite
// polynomials and composite Simpson on [0, z_k].
double component_oracle(const MonotoneComponent& c, std::span<const double> z) {
  const std::size_t k = c.input_dim();
  const auto& basis = c.basis();
  auto term = [&](std::size_t i, double last) {
    double p = 1.0;
    for (std::size_t j = 0; j + 1 < k; ++j) p *= hermite_oracle(basis[i][j], z[j]);
    return p * hermite_oracle(basis[i][k - 1], last);
  };
  double g = 0.0;
  std::size_t nm = 0;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i][k - 1] == 0) g += c.coeffs_nonmonotone()[nm++] * term(i, 0.0);
  auto integrand = [&](double t) {
    double h = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) h += c.coeffs_monotone()[i] * term(i, t);
    return std::log1p(std::exp(h));
  };
  const int n = 20000;
  const double width = z[k - 1] / n;
  double s = integrand(0.0) + integrand(z[k - 1]);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(i * width);
  return g + s * width / 3.0;
}

MonotoneComponent random_component(Rng& rng, std::size_t k, std::size_t order, double scale) {
  auto c = MonotoneComponent::identity(k, order);
  Vector p = c.parameters();
  for (double& v : p) v += scale * rng.normal();
  c.set_parameters(p);
  return c;
}

MonotoneTriangularMap random_map(Rng& rng, BlockSplit split, Orientation o, Parametrization param,
                                 std::size_t order = 3) {
  auto map = MonotoneTriangularMap::identity(split, o, param, order);
  biflow::testing::perturb_bijective(map, rng, 0.1);
  return map;
}

Matrix jacobian(const TriangularMap& t, std::span<const double> z) {
  const std::size_t d = z.size();
  Matrix j(d, d);
  Vector zp(z.begin(), z.end()), zm(z.begin(), z.end());
  for (std::size_t c = 0; c < d; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(z[c]));
    zp[c] = z[c] + h;
    zm[c] = z[c] - h;
    const Vector fp = t.forward(zp), fm = t.forward(zm);
    for (std::size_t r = 0; r < d; ++r) j(r, c) = (fp[r] - fm[r]) / (2.0 * h);
    zp[c] = zm[c] = z[c];
  }
  return j;
}

Vector normals(Rng& rng, std::size_t d) {
  Vector v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(PolynomialBasis, HermiteMatchesClosedForms) {
  Vector out(5);
  for (double x : {-2.5, -0.3, 0.0, 1.0, 3.7}) {
    hermite_values(x, 4, out);
    for (unsigned k = 0; k <= 4; ++k) EXPECT_NEAR(out[k], hermite_oracle(k, x), 1e-12 * (1 + std::pow(std::abs(x), k)));
  }
}

TEST(PolynomialBasis, TotalOrderSetIsGradedWithZeroFirst) {
  const auto s = MultiIndexSet::total_order(2, 2);
  EXPECT_EQ(s.size(), 6u);
  EXPECT_EQ(s[0][0] + s[0][1], 0u);
  std::uint32_t last = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto total = s[i][0] + s[i][1];
    EXPECT_GE(total, last);
    last = total;
  }
  // binomial(3 + 4, 3)
  EXPECT_EQ(MultiIndexSet::total_order(3, 4).size(), 35u);
  EXPECT_EQ(MultiIndexSet(2, 2, s.to_vectors()), s);
  EXPECT_THROW(MultiIndexSet(2, 2, {{1, 0}}), Error);
  EXPECT_THROW(MultiIndexSet(2, 1, {{0, 0}, {2, 0}}), Error);
}

TEST(PolynomialBasis, GaussLegendreIntegratesPolynomialsExactly) {
  const auto rule = gauss_legendre(32);
  ASSERT_EQ(rule->nodes.size(), 32u);
  double w = 0.0, m62 = 0.0, m63 = 0.0;
  for (std::size_t i = 0; i < 32; ++i) {
    w += rule->weights[i];
    m62 += rule->weights[i] * std::pow(rule->nodes[i], 62);
    m63 += rule->weights[i] * std::pow(rule->nodes[i], 63);
  }
  EXPECT_NEAR(w, 2.0, 1e-14);
  EXPECT_NEAR(m62, 2.0 / 63.0, 1e-14);
  EXPECT_NEAR(m63, 0.0, 1e-14);
  EXPECT_EQ(gauss_legendre(32).get(), rule.get());
}

TEST(PolynomialBasis, SoftplusValues) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_NEAR(softplus(2.0), std::log1p(std::exp(2.0)), 1e-15);
  EXPECT_NEAR(softplus(50.0), 50.0, 1e-15);
  EXPECT_GT(softplus(-100.0), 0.0);
  EXPECT_DOUBLE_EQ(softplus_derivative(0.0), 0.5);
  for (double t : {-5.0, -0.5, 0.7, 4.0}) EXPECT_NEAR(softplus_derivative(t), 1.0 / (1.0 + std::exp(-t)), 1e-15);
}

TEST(MonotoneComponent, IdentityAndAffineFactories) {
  const auto id = MonotoneComponent::identity(3, 2);
  const Vector z{0.4, -1.3, 2.2};
  EXPECT_NEAR(id.evaluate(z), 2.2, 1e-13);
  EXPECT_NEAR(id.diagonal_derivative(z), 1.0, 1e-13);

  const Vector off{0.5, -2.0};
  const auto af = MonotoneComponent::affine(off, 3.0, 0.25);
  EXPECT_NEAR(af.evaluate(z), 0.25 + 0.5 * 0.4 + 2.0 * 1.3 + 3.0 * 2.2, 1e-12);
  EXPECT_NEAR(af.diagonal_derivative(z), 3.0, 1e-13);
  EXPECT_THROW(MonotoneComponent::affine(off, 3.0, 0.0, 0), Error);
  EXPECT_THROW(MonotoneComponent::affine(off, -1.0, 0.0), Error);
}

TEST(MonotoneComponent, EvaluateMatchesBruteForceOracle) {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto c = random_component(rng, 3, 3, 0.2);
    const Vector z{rng.normal(), rng.normal(), 2.0 * rng.normal()};
    EXPECT_NEAR(c.evaluate(z), component_oracle(c, z), 1e-8);
  }
}

TEST(MonotoneComponent, StrictlyIncreasingWithMatchingSlope) {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const auto c = random_component(rng, 2, 4, 0.1);
    Vector z{rng.normal(), -3.0};
    double prev = c.evaluate(z);
    for (int i = 1; i < 100; ++i) {
      z[1] = -3.0 + 6.0 * i / 99.0;
      const double v = c.evaluate(z);
      EXPECT_GT(v, prev);
      prev = v;
      const double h = 1e-5;
      Vector zp = z, zm = z;
      zp[1] += h;
      zm[1] -= h;
      const double fd = (c.evaluate(zp) - c.evaluate(zm)) / (2.0 * h);
      EXPECT_NEAR(c.diagonal_derivative(z), fd, 1e-5 * (1.0 + std::abs(fd)));
      EXPECT_GT(c.diagonal_derivative(z), 0.0);
    }
  }
}

TEST(MonotoneComponent, SectionSolveInvertsValue) {
  Rng rng(3);
  const auto c = random_component(rng, 3, 3, 0.2);
  const Vector prefix{0.3, -0.8};
  const auto s = c.section(prefix);
  for (double t0 : {-2.5, -1.0, 0.0, 0.3, 1.7, 3.0}) {
    const double target = s.value(t0);
    const double t = s.solve(target);
    EXPECT_NEAR(t, t0, 1e-9);
    EXPECT_LE(std::abs(s.value(t) - target), 1e-10 * std::max(1.0, std::abs(target)));
    EXPECT_NEAR(s.value(t), c.evaluate(Vector{0.3, -0.8, t}), 1e-12 * std::max(1.0, std::abs(target)));
  }
}

TEST(MonotoneComponent, FlatSectionReportsBracketNotFound) {
  // softplus(-40) is about 1e-13, so the range over [-1e8, 1e8] stays near zero.
  auto c = MonotoneComponent::identity(1, 0);
  c.set_parameters(Vector{0.0, -40.0});
  try {
    (void)c.section({}).solve(1.0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BracketNotFound);
  }
}

TEST(TriangularMap, AffineMapEvaluatesAndValidates) {
  const Matrix a{{2.0, 0.0, 0.0}, {1.0, 0.5, 0.0}, {-1.0, 3.0, 4.0}};
  const AffineTriangularMap t(a, Vector{1.0, 0.0, -1.0}, Orientation::Lower, {1, 2});
  const Vector z{1.0, 2.0, 3.0};
  EXPECT_EQ(t.forward(z), (Vector{3.0, 2.0, 16.0}));
  EXPECT_LT(max_abs_diff(t.inverse(t.forward(z)), z), 1e-14);
  EXPECT_NEAR(t.log_det_forward(z), std::log(4.0), 1e-15);
  EXPECT_THROW(AffineTriangularMap(a, Vector(3, 0.0), Orientation::Upper, {1, 2}), Error);
  try {
    AffineTriangularMap(Matrix{{1.0, 0.0}, {0.0, -1.0}}, Vector(2, 0.0), Orientation::Lower, {1, 1});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularDiagonal);
  }
}

TEST(TriangularMap, SignTargetHandValues) {
  const SignTargetMap t(2.0, 0.5);
  EXPECT_EQ(t.forward(Vector{0.25, 1.0}), (Vector{0.5, 1.5}));
  EXPECT_EQ(t.forward(Vector{-0.25, 1.0}), (Vector{-0.5, -0.5}));
  EXPECT_EQ(t.forward(Vector{0.0, 0.0}), (Vector{0.0, 1.0}));
  EXPECT_EQ(t.inverse(Vector{-0.5, -0.5}), (Vector{-0.25, 1.0}));
  EXPECT_NEAR(t.log_det_forward(Vector{0.1, 0.1}), std::log(1.0), 1e-15);
  EXPECT_NEAR(t.log_det_inverse(Vector{0.1, 0.1}), 0.0, 1e-15);
  EXPECT_EQ(sign_nonneg(0.0), 1.0);
  EXPECT_EQ(sign_nonneg(-1e-300), -1.0);

  const auto like = conditional_like(t, Vector{0.5});
  EXPECT_EQ(like.forward(Vector{0.4}), (Vector{1.2}));
  EXPECT_EQ(conditional_like(t, Vector{-0.3}).forward(Vector{0.4}), (Vector{-0.8}));
  EXPECT_NEAR(like.inverse(Vector{1.2})[0], 0.4, 1e-15);
  EXPECT_THROW(conditional_post(t, Vector{1.0}), Error);
}

TEST(TriangularMap, GaussianConditionalsMatchClosedForm) {
  const auto p = GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 0.5);
  const GaussianMaps maps = build_maps(p);
  const AffineTriangularMap fc(maps.f_check, Vector(4, 0.0), Orientation::Lower, p.split());
  const AffineTriangularMap fh(maps.f_hat, Vector(4, 0.0), Orientation::Upper, p.split());

  // likelihood push: y -> K u + 0.5 y
  const Vector u{0.7, -0.2};
  const auto like = conditional_like(fc, u);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const Vector y = normals(rng, 2);
    EXPECT_LT(max_abs_diff(like.forward(y), axpy(0.5, y, p.k * u)), 1e-13);
  }

  // posterior push: x -> mean + P x, with P P^T = S_post
  const Vector f{1.0, 1.0};
  const PosteriorMoments pm = posterior_moments(p, f);
  const auto post = conditional_post(fh, f);
  const Vector mean = post.forward(Vector{0.0, 0.0});
  EXPECT_LT(max_abs_diff(mean, pm.mean), 1e-13);
  Matrix pfac(2, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    Vector e(2, 0.0);
    e[c] = 1.0;
    const Vector col = axpy(-1.0, mean, post.forward(e));
    pfac(0, c) = col[0];
    pfac(1, c) = col[1];
  }
  EXPECT_LT(max_abs_diff(pfac * pfac.transpose(), pm.cov), 1e-13);
  EXPECT_LT(max_abs_diff(post.inverse(post.forward(Vector{0.3, 0.9})), Vector{0.3, 0.9}), 1e-13);
}

class MonotoneMapProperties : public ::testing::TestWithParam<std::tuple<Orientation, Parametrization>> {};

TEST_P(MonotoneMapProperties, RoundTripLogDetAndTriangularity) {
  const auto [orient, param] = GetParam();
  Rng rng(5);
  auto map = random_map(rng, {2, 2}, orient, param);
  map.set_standardization(Vector{0.5, -0.2, 1.0, 0.0}, Vector{2.0, 0.5, 1.5, 1.0});
  for (int rep = 0; rep < 20; ++rep) {
    const Vector z = normals(rng, 4);
    const Vector w = map.forward(z);
    EXPECT_LT(max_abs_diff(map.inverse(w), z), 1e-8);
    EXPECT_NEAR(map.log_det_forward(z), -map.log_det_inverse(w), 1e-8);

    const Matrix j = jacobian(map, z);
    double log_diag = 0.0;
    for (std::size_t i = 0; i < 4; ++i) log_diag += std::log(j(i, i));
    EXPECT_LT(std::abs(map.log_det_forward(z) - log_diag) / std::max(1.0, std::abs(log_diag)), 1e-5);

    // perturbing input c must leave the outputs that do not depend on it unchanged
    for (std::size_t c = 0; c < 4; ++c) {
      Vector zc = z;
      zc[c] += 0.37;
      const Vector wc = map.forward(zc);
      for (std::size_t r = 0; r < 4; ++r) {
        const bool independent = orient == Orientation::Lower ? r < c : r > c;
        if (independent) {
          EXPECT_EQ(wc[r], w[r]) << "output " << r << " input " << c;
        }
      }
    }
  }
}

TEST_P(MonotoneMapProperties, BlockPrimitivesAgreeWithFullMap) {
  const auto [orient, param] = GetParam();
  Rng rng(6);
  const auto map = random_map(rng, {1, 2}, orient, param);
  const std::size_t io = map.independent_offset(), is = map.independent_size();
  const std::size_t dof = map.dependent_offset(), ds = map.dependent_size();
  for (int rep = 0; rep < 10; ++rep) {
    const Vector z = normals(rng, 3);
    const Vector w = map.forward(z);
    const std::span<const double> zi(z.data() + io, is), zd(z.data() + dof, ds);
    const std::span<const double> wi(w.data() + io, is), wd(w.data() + dof, ds);
    EXPECT_LT(max_abs_diff(map.independent_forward(zi), wi), 1e-12);
    EXPECT_LT(max_abs_diff(map.independent_inverse(wi), zi), 1e-8);
    EXPECT_LT(max_abs_diff(map.dependent_forward(zi, wi, zd), wd), 1e-8);
    EXPECT_LT(max_abs_diff(map.dependent_inverse(zi, wi, wd), zd), 1e-8);

    const Vector cond(wi.begin(), wi.end());
    const ConditionalMap cm(map, cond);
    EXPECT_LT(max_abs_diff(cm.forward(zd), wd), 1e-8);
    EXPECT_LT(max_abs_diff(cm.inverse(cm.forward(zd)), zd), 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, MonotoneMapProperties,
                         ::testing::Combine(::testing::Values(Orientation::Lower, Orientation::Upper),
                                            ::testing::Values(Parametrization::Forward, Parametrization::Inverse)));

TEST(MonotoneMap, IdentityIsIdentity) {
  const auto map = MonotoneTriangularMap::identity({2, 1}, Orientation::Upper, Parametrization::Inverse, 2);
  const Vector z{0.3, -1.1, 2.0};
  EXPECT_LT(max_abs_diff(map.forward(z), z), 1e-12);
  EXPECT_NEAR(map.log_det_forward(z), 0.0, 1e-12);
}

TEST(MonotoneMap, RejectsMisshapenComponents) {
  std::vector<MonotoneComponent> comps{MonotoneComponent::identity(1, 1), MonotoneComponent::identity(1, 1)};
  EXPECT_THROW(MonotoneTriangularMap({1, 1}, Orientation::Lower, Parametrization::Forward, comps), Error);
  auto map = MonotoneTriangularMap::identity({1, 1}, Orientation::Lower, Parametrization::Forward, 1);
  EXPECT_THROW(map.set_standardization(Vector{0.0, 0.0}, Vector{1.0, 0.0}), Error);
}

TEST(MapIo, MonotoneRoundTripIsBitIdentical) {
  TempDir dir("mapio");
  Rng rng(7);
  for (auto o : {Orientation::Lower, Orientation::Upper}) {
    auto map = random_map(rng, {1, 2}, o, Parametrization::Inverse);
    map.set_standardization(Vector{0.1, 0.2, 0.3}, Vector{1.0 / 3.0, 2.0, 0.7});
    save_map(dir / "m.json", map);
    const auto back = load_map(dir / "m.json");
    EXPECT_EQ(map_to_json(*back).dump(), map_to_json(map).dump());
    for (int i = 0; i < 10; ++i) {
      const Vector z = normals(rng, 3);
      EXPECT_EQ(back->forward(z), map.forward(z));
      EXPECT_EQ(back->inverse(z), map.inverse(z));
    }
  }
}

TEST(MapIo, AffineAndSignTargetRoundTrip) {
  const AffineTriangularMap a(Matrix{{0.1, 0.0}, {1.0 / 3.0, 2.0}}, Vector{0.5, -0.25}, Orientation::Lower, {1, 1});
  const auto ab = map_from_json(map_to_json(a));
  EXPECT_EQ(ab->forward(Vector{0.7, 0.1}), a.forward(Vector{0.7, 0.1}));
  const SignTargetMap s(1.0, 0.5);
  const auto sb = map_from_json(map_to_json(s));
  EXPECT_EQ(sb->forward(Vector{-0.7, 0.1}), s.forward(Vector{-0.7, 0.1}));
  EXPECT_EQ(orientation_from_string(to_string(Orientation::Upper)), Orientation::Upper);
}

TEST(MapIo, MalformedDocumentsAreBadModel) {
  const auto map = MonotoneTriangularMap::identity({1, 1}, Orientation::Lower, Parametrization::Inverse, 2);
  auto doc = map_to_json(map);
  auto expect_bad = [](const nlohmann::json& d) {
    try {
      (void)map_from_json(d);
      ADD_FAILURE() << d.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadModel);
    }
  };
  auto missing = doc;
  missing.erase("components");
  expect_bad(missing);
  auto wrong_count = doc;
  wrong_count["components"][1]["coeffs_monotone"].push_back(1.0);
  expect_bad(wrong_count);
  auto wrong_type = doc;
  wrong_type["type"] = "spline";
  expect_bad(wrong_type);
  expect_bad(nlohmann::json::array());
}
