#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include <unistd.h>

#include "biflow/error.hpp"
#include "biflow/experiments.hpp"
#include "biflow/gaussian_model.hpp"
#include "biflow/io.hpp"
#include "biflow/map_io.hpp"
#include "biflow/monotone_map.hpp"
#include "biflow/training.hpp"

namespace biflow {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// Order-3 upper map with small random coefficients.
MonotoneTriangularMap random_map(Rng& rng, Parametrization param) {
  auto map = MonotoneTriangularMap::identity({1, 2}, Orientation::Upper, param, 3);
  Vector p = map_parameters(map);
  for (double& v : p) v += 0.2 * (rng.uniform() - 0.5);
  set_map_parameters(map, p);
  return map;
}

SelftestCheck gaussian_pair(std::size_t points) {
  const auto problem = GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 0.1);
  const GaussianMaps maps = build_maps(problem);
  const BidirectionalMap s = gaussian_bidirectional(maps);
  Rng rng(3);
  double err = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const Vector uy{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const Vector xf = s.apply_s(std::span(uy).first(2), std::span(uy).subspan(2));
    const Vector back = s.apply_r(std::span(xf).first(2), std::span(xf).subspan(2));
    const Vector direct = maps.s * uy;
    for (std::size_t j = 0; j < 4; ++j)
      err = std::max({err, std::abs(back[j] - uy[j]), std::abs(direct[j] - xf[j])});
  }
  const double kc = condition_number_2(maps.f_check), kh = condition_number_2(maps.f_hat);
  const double rel = std::abs(kc - kh) / kc;
  return {"gaussian bidirectional pair", err < 1e-9 && rel < 1e-8,
          "max error " + fmt(err) + ", kappa rel diff " + fmt(rel)};
}

SelftestCheck monotone_round_trip(std::size_t points) {
  Rng rng(5);
  double err = 0.0, jac = 0.0;
  for (auto param : {Parametrization::Forward, Parametrization::Inverse}) {
    const auto map = random_map(rng, param);
    for (std::size_t i = 0; i < points; ++i) {
      const Vector z{rng.normal(), rng.normal(), rng.normal()};
      const Vector w = map.forward(z);
      const Vector back = map.inverse(w);
      for (std::size_t j = 0; j < 3; ++j) err = std::max(err, std::abs(back[j] - z[j]));
      jac = std::max(jac, std::abs(map.log_det_forward(z) + map.log_det_inverse(w)));
    }
  }
  return {"monotone map round trip", err < 1e-8 && jac < 1e-8,
          "max error " + fmt(err) + ", log-det mismatch " + fmt(jac)};
}

SelftestCheck gradient_check(std::size_t points) {
  Rng rng(7);
  auto map = random_map(rng, Parametrization::Inverse);
  const SampleBatch batch = standard_normal(rng, points, 3);
  const Vector a = kl_gradient(map, batch), fd = kl_gradient_fd(map, batch);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, std::abs(a[j] - fd[j]) / std::max({std::abs(a[j]), std::abs(fd[j]), 1e-6}));
  return {"analytic gradient", worst < 1e-4, "max relative error " + fmt(worst)};
}

SelftestCheck mmd_check(std::size_t n) {
  Rng rng(11);
  const SampleBatch a = standard_normal(rng, n, 1), b = standard_normal(rng, n, 1);
  SampleBatch shifted = standard_normal(rng, n, 1);
  SampleBatch c(1);
  for (std::size_t i = 0; i < n; ++i) c.push_back(Vector{shifted(i, 0) + 3.0});
  const double p_same = *mmd(a, b, {std::nullopt, 200, 1}).permutation_p;
  const double p_diff = *mmd(a, c, {std::nullopt, 200, 2}).permutation_p;
  return {"mmd permutation test", p_same > 0.01 && p_diff < 0.005,
          "p(same) " + fmt(p_same) + ", p(shifted) " + fmt(p_diff)};
}

SelftestCheck persistence_check() {
  const auto dir = std::filesystem::temp_directory_path() / ("biflow-selftest-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  Rng rng(13);
  const auto map = random_map(rng, Parametrization::Inverse);
  const std::string path = (dir / "map.json").string();
  save_map(path, map);
  const auto loaded = load_map(path);
  bool same = true;
  for (int i = 0; i < 20; ++i) {
    const Vector w{rng.normal(), rng.normal(), rng.normal()};
    same = same && loaded->inverse(w) == map.inverse(w);
  }
  write_text((dir / "broken.json").string(), "{\"type\": \"monotone\", \"dimension\": ");
  bool surfaced = false;
  try {
    (void)load_map((dir / "broken.json").string());
  } catch (const Error& e) {
    surfaced = e.code() == ErrorCode::BadModel;
  }

  ImageBatch img{2, 2, 2, {0.0, 1.0, 128 / 255.0, 3 / 255.0, 1.0, 0.0, 0.5 + 0.5 / 255.0, 7 / 255.0}};
  save_idx((dir / "img.idx").string(), img);
  const ImageBatch back = load_idx_images((dir / "img.idx").string());
  save_idx((dir / "img2.idx").string(), back);
  const bool idx_ok = read_file((dir / "img.idx").string()) == read_file((dir / "img2.idx").string()) &&
                      back.count == 2 && back.height == 2;
  std::filesystem::remove_all(dir);
  return {"persistence", same && surfaced && idx_ok,
          std::string("map round trip ") + (same ? "exact" : "differs") + ", corrupted model " +
              (surfaced ? "rejected" : "accepted") + ", idx round trip " + (idx_ok ? "exact" : "differs")};
}

SelftestCheck determinism_check(std::size_t n) {
  const auto problem = GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 0.5);
  const BidirectionalMap s = gaussian_bidirectional(build_maps(problem));
  const Vector f{1.0, 1.0};
  const bool same = infer(s, f, n, 42).values() == infer(s, f, n, 42).values() &&
                    simulate(s, f, n, 42).values() == simulate(s, f, n, 42).values();
  return {"seeded sampling is deterministic", same, same ? "identical" : "differs"};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(bool fast) {
  const std::size_t scale = fast ? 1 : 4;
  std::vector<std::function<SelftestCheck()>> checks = {
      [&] { return gaussian_pair(100 * scale); },
      [&] { return monotone_round_trip(50 * scale); },
      [&] { return gradient_check(64 * scale); },
      [&] { return mmd_check(fast ? 300 : 1000); },
      [&] { return persistence_check(); },
      [&] { return determinism_check(500 * scale); },
  };
  std::vector<SelftestCheck> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"(check raised)", false, e.what()});
    }
  }
  return out;
}

}  // namespace biflow
