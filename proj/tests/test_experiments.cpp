#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "biflow/error.hpp"
#include "biflow/experiments.hpp"
#include "biflow/io.hpp"
#include "biflow/stats.hpp"
#include "test_support.hpp"

using namespace biflow;
using biflow::testing::TempDir;
using nlohmann::json;

namespace {

const std::string kDigits = std::string(BIFLOW_TEST_DATA) + "/digits-images-idx3-ubyte.gz";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BIFLOW_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool exists(const std::string& p) { return std::filesystem::exists(p); }

std::size_t line_count(const std::string& path) {
  const std::string t = read_text(path);
  return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
}

// Midpoint rule on a fine grid over the unnormalized posterior density.
double posterior_mass(double a, double b, double f, double lo, double hi) {
  auto density = [&](double u) {
    const double mu = u >= 0.0 ? 1.0 : -1.0;
    return std::exp(-0.5 * u * u / (a * a) - 0.5 * (f - mu) * (f - mu) / (b * b));
  };
  auto integrate = [&](double l, double r) {
    const int n = 200000;
    const double h = (r - l) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += density(l + (i + 0.5) * h);
    return s * h;
  };
  return integrate(lo, hi) / (integrate(-12.0 * a, 0.0) + integrate(0.0, 12.0 * a));
}

}  // namespace

TEST(Experiments, SignTargetBinsMatchQuadrature) {
  const Vector edges{-4.0, -1.0, -0.2, 0.0, 0.3, 1.0, 4.0};
  for (double f : {1.0, 0.0, -0.7}) {
    const auto p = sign_target_posterior_bins(1.0, 0.5, f, edges);
    ASSERT_EQ(p.size(), 6u);
    for (std::size_t i = 0; i < p.size(); ++i)
      EXPECT_NEAR(p[i], posterior_mass(1.0, 0.5, f, edges[i], edges[i + 1]), 1e-8) << "f " << f << " bin " << i;
  }
}

TEST(Experiments, SignTargetSamplesFollowTheMap) {
  const SampleBatch s = sign_target_samples(2.0, 0.5, 5000, 3);
  EXPECT_EQ(s.block_split(), (BlockSplit{1, 1}));
  // f - sign(u) is N(0, b^2) and independent of the sign
  Vector resid(s.count());
  for (std::size_t i = 0; i < s.count(); ++i) resid[i] = s(i, 1) - (s(i, 0) >= 0.0 ? 1.0 : -1.0);
  EXPECT_LT(ks_statistic(resid, [](double x) { return normal_cdf(x, 0.0, 0.5); }), 0.03);
  EXPECT_LT(ks_statistic(s.coordinate(0), [](double x) { return normal_cdf(x, 0.0, 2.0); }), 0.03);
  EXPECT_EQ(sign_target_samples(2.0, 0.5, 100, 3).values(), s.rows(0, 100).values());
}

TEST(Experiments, ModelFilesRoundTripAndRejectGarbage) {
  TempDir dir("model");
  const GaussianMaps maps = build_maps(GaussianLinearProblem::isotropic(Matrix{{2.0, 1.0}, {1.0, 2.0}}, 0.5));
  const BidirectionalMap s = gaussian_bidirectional(maps, Vector{0.1, 0.2, 0.3, 0.4});
  save_model(dir / "m.json", {s.f_check_ptr(), s.f_hat_ptr(), {{"kind", "test"}}});
  const StoredModel back = load_model(dir / "m.json");
  EXPECT_EQ(back.meta["kind"], "test");
  const Vector u{0.3, -0.1}, y{1.0, 2.0};
  EXPECT_EQ(back.bidirectional().apply_s(u, y), s.apply_s(u, y));

  auto expect_bad = [&](const std::string& text) {
    write_text(dir / "bad.json", text);
    try {
      (void)load_model(dir / "bad.json");
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadModel);
    }
  };
  expect_bad("{\"type\": \"bidirectional\", \"f_check\": ");
  expect_bad("{\"type\": \"other\"}");
  expect_bad("[1, 2]");
  // factors swapped: orientation check fails
  json doc = json::parse(read_text(dir / "m.json"));
  std::swap(doc["f_check"], doc["f_hat"]);
  write_text(dir / "swapped.json", doc.dump());
  EXPECT_THROW(load_model(dir / "swapped.json"), Error);
}

TEST(Cli, GaussianSweepWritesCsvAndManifest) {
  TempDir dir("cli-sweep");
  ASSERT_EQ(run_cli("gaussian-sweep --sigma-min 1e-6 --sigma-max 1 --steps 7 --out " + dir.str()), 0);
  EXPECT_EQ(line_count(dir / "sweep.csv"), 8u);
  const json m = json::parse(read_text(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "gaussian-sweep");
  EXPECT_EQ(m["config"]["steps"], 7);
  EXPECT_TRUE(m.contains("seed"));
  EXPECT_TRUE(m.contains("version"));
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli-codes");
  EXPECT_EQ(run_cli("gaussian-sweep --sigma-min 1e-6 --sigma-max 1 --steps 0 --out " + dir.str()), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("nonlinear train --a 1"), 2);
  write_text(dir / "broken.json", "{\"type\": \"bidirectional\"");
  EXPECT_EQ(run_cli("nonlinear sample --model " + dir / "broken.json" + " --condition u=0.5 --n 10 --seed 1 --out " +
                    dir / "o"),
            3);
  EXPECT_EQ(run_cli("inpaint fit --images " + dir / "missing.idx" +
                    " --ridge 1e-3 --mask bottom-half --downscale 2 --n-train 10 --noise 0.05 --out " + dir / "o"),
            3);
  EXPECT_EQ(run_cli("selftest --fast"), 0);
}

TEST(Cli, NonlinearTrainSampleEvaluate) {
  TempDir dir("cli-nl");
  ASSERT_EQ(run_cli("nonlinear train --a 1 --b 0.5 --order 2 --samples 400 --epochs 3 --seed 5 --out " + dir / "t"), 0);
  for (const char* f : {"model.json", "train_report.json", "loss.csv", "manifest.json"}) EXPECT_TRUE(exists(dir / "t/" + f)) << f;
  EXPECT_EQ(line_count(dir / "t/loss.csv"), 4u);

  const std::string model = dir / "t/model.json";
  EXPECT_EQ(run_cli("nonlinear sample --model " + model + " --condition z=1 --n 10 --seed 1 --out " + dir / "s"), 2);
  ASSERT_EQ(run_cli("nonlinear sample --model " + model + " --condition f=1 --n 50 --seed 1 --out " + dir / "s1"), 0);
  ASSERT_EQ(run_cli("nonlinear sample --model " + model + " --condition f=1 --n 50 --seed 1 --out " + dir / "s2"), 0);
  EXPECT_EQ(line_count(dir / "s1/samples.csv"), 51u);
  EXPECT_EQ(read_file(dir / "s1/samples.csv"), read_file(dir / "s2/samples.csv"));
  const json man = json::parse(read_text(dir / "s1/manifest.json"));
  EXPECT_EQ(man["inputs"][0]["sha256"], sha256_file(model));

  NonlinearEvaluateConfig cfg;
  cfg.model = model;
  cfg.out = dir / "e";
  cfg.n_conditional = 500;
  cfg.n_mmd = 100;
  cfg.permutations = 20;
  cfg.grid = 5;
  cfg.flow_points = 10;
  const json diag = cmd_nonlinear_evaluate(cfg);
  EXPECT_EQ(line_count(dir / "e/condition_grid.csv"), 26u);
  EXPECT_EQ(line_count(dir / "e/flow_pairs.csv"), 31u);
  EXPECT_EQ(line_count(dir / "e/posterior_hist.csv"), 41u);
  EXPECT_EQ(diag["j_losses"].size(), 4u);
  EXPECT_TRUE(diag["infer"]["tv"].is_number());
  EXPECT_TRUE(exists(dir / "e/diagnostics.json"));
}

TEST(Cli, InpaintFitSimulateInfer) {
  TempDir dir("cli-inpaint");
  ASSERT_EQ(run_cli("inpaint fit --images " + kDigits +
                    " --ridge 1e-3 --mask bottom-half --downscale 4 --n-train 300 --noise 0.05 --out " + dir / "fit"),
            0);
  EXPECT_TRUE(exists(dir / "fit/mean_image.pgm"));
  const InpaintModel m = load_inpaint_model(dir / "fit/model.json");
  EXPECT_EQ(m.height, 7u);
  EXPECT_EQ(m.mask.measured_size(), 21u);

  const std::string common = " --model " + dir / "fit/model.json" + " --images " + kDigits + " --index 9000 --n 5 --seed 2";
  ASSERT_EQ(run_cli("inpaint simulate" + common + " --out " + dir / "sim"), 0);
  ASSERT_EQ(run_cli("inpaint infer" + common + " --out " + dir / "inf"), 0);
  EXPECT_EQ(line_count(dir / "sim/simulated.csv"), 6u);
  EXPECT_EQ(line_count(dir / "sim/simulate_stats.csv"), 22u);
  EXPECT_EQ(line_count(dir / "inf/posterior.csv"), 6u);
  EXPECT_EQ(line_count(dir / "inf/posterior_stats.csv"), 50u);
  for (const char* f : {"true.pgm", "observed.pgm", "posterior_mean.pgm", "posterior_std.pgm", "sample_4.pgm"})
    EXPECT_TRUE(exists(dir / "inf/" + f)) << f;
  EXPECT_EQ(run_cli("inpaint infer --model " + dir / "fit/model.json" + " --images " + kDigits +
                    " --index 20000 --n 5 --seed 2 --out " + dir / "bad"),
            2);
}
