#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "biflow/error.hpp"
#include "biflow/experiments.hpp"

namespace {

int exit_code(biflow::ErrorCategory c) {
  switch (c) {
    case biflow::ErrorCategory::Usage: return 2;
    case biflow::ErrorCategory::Data: return 3;
    case biflow::ErrorCategory::Numerical: return 4;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional transport maps for simulation and inference"};
  app.require_subcommand(1);

  biflow::GaussianSweepConfig sweep;
  auto* gs = app.add_subcommand("gaussian-sweep", "Condition numbers of F and S over a noise grid");
  gs->add_option("--sigma-min", sweep.sigma_min)->required();
  gs->add_option("--sigma-max", sweep.sigma_max)->required();
  gs->add_option("--steps", sweep.steps)->required();
  gs->add_option("--out", sweep.out)->required();
  gs->add_option("--seed", sweep.seed);

  auto* nl = app.add_subcommand("nonlinear", "Sign-function likelihood example");
  nl->require_subcommand(1);
  biflow::NonlinearTrainConfig train;
  auto* nt = nl->add_subcommand("train", "Fit the upper map to target samples");
  nt->add_option("--a", train.a)->required();
  nt->add_option("--b", train.b)->required();
  nt->add_option("--order", train.order)->required();
  nt->add_option("--samples", train.samples)->required();
  nt->add_option("--epochs", train.epochs)->required();
  nt->add_option("--out", train.out)->required();
  nt->add_option("--seed", train.seed)->required();
  biflow::NonlinearSampleConfig sample;
  auto* ns = nl->add_subcommand("sample", "Conditional samples for u=VALUE or f=VALUE");
  ns->add_option("--model", sample.model)->required();
  ns->add_option("--condition", sample.condition)->required();
  ns->add_option("--n", sample.n)->required();
  ns->add_option("--out", sample.out)->required();
  ns->add_option("--seed", sample.seed)->required();
  biflow::NonlinearEvaluateConfig eval;
  auto* ne = nl->add_subcommand("evaluate", "KS/TV/MMD diagnostics and the condition-number grid");
  ne->add_option("--model", eval.model)->required();
  ne->add_option("--out", eval.out)->required();
  ne->add_option("--seed", eval.seed)->required();

  auto* ip = app.add_subcommand("inpaint", "Affine inpainting of masked digits");
  ip->require_subcommand(1);
  biflow::InpaintFitConfig fit;
  auto* ifit = ip->add_subcommand("fit", "Fit the empirical Gaussian and build the affine maps");
  ifit->add_option("--images", fit.images)->required();
  ifit->add_option("--ridge", fit.ridge)->required();
  ifit->add_option("--mask", fit.mask)->required();
  ifit->add_option("--downscale", fit.downscale)->required();
  ifit->add_option("--n-train", fit.n_train)->required();
  ifit->add_option("--noise", fit.noise)->required();
  ifit->add_option("--out", fit.out)->required();
  ifit->add_option("--seed", fit.seed);
  biflow::InpaintSampleConfig isample;
  auto add_sample_options = [&](CLI::App* c) {
    c->add_option("--model", isample.model)->required();
    c->add_option("--images", isample.images)->required();
    c->add_option("--index", isample.index)->required();
    c->add_option("--n", isample.n)->required();
    c->add_option("--out", isample.out)->required();
    c->add_option("--seed", isample.seed)->required();
  };
  auto* isim = ip->add_subcommand("simulate", "Measurements of a held-out digit");
  add_sample_options(isim);
  auto* iinf = ip->add_subcommand("infer", "Posterior samples for a held-out digit");
  add_sample_options(iinf);

  bool fast = false;
  auto* st = app.add_subcommand("selftest", "Reduced property suites");
  st->add_flag("--fast", fast);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gs) biflow::cmd_gaussian_sweep(sweep);
    else if (*nt) biflow::cmd_nonlinear_train(train);
    else if (*ns) biflow::cmd_nonlinear_sample(sample);
    else if (*ne) biflow::cmd_nonlinear_evaluate(eval);
    else if (*ifit) biflow::cmd_inpaint_fit(fit);
    else if (*isim) biflow::cmd_inpaint_simulate(isample);
    else if (*iinf) biflow::cmd_inpaint_infer(isample);
    else if (*st) {
      bool ok = true;
      for (const auto& c : biflow::run_selftest(fast)) {
        std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.passed;
      }
      return ok ? 0 : 4;
    }
  } catch (const biflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
