#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "spamiss/commands.hpp"
#include "spamiss/errors.hpp"
#include "spamiss/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial regression with missing covariates"};
  app.set_version_flag("--version", spamiss::kVersion);
  app.require_subcommand(1);

  spamiss::CliOptions opts;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config_path, "configuration file");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { opts.seed = seed_flag; });
    sub->add_option("--threads", opts.threads, "worker pool size (0 = hardware)");
    sub->add_flag("--cc", opts.cc, "complete-case mode: drop rows with missing covariates");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate replicate datasets");
  add_common(sim, true);

  CLI::App* fit = app.add_subcommand("fit", "fit one model to one dataset");
  add_common(fit, true);
  fit->add_option("data", opts.dataset_path, "observations CSV (overrides [data].observations)");
  fit->add_option("--locations", opts.locations_path, "locations CSV (overrides [data].locations)");

  CLI::App* cmp = app.add_subcommand("compare", "rank fitted models by mDIC and mLPML");
  add_common(cmp, false);
  cmp->add_option("inputs", opts.inputs, "criteria.tsv files or fit output directories")
      ->required();

  CLI::App* study = app.add_subcommand("replicate-study", "simulate-and-fit study with metrics");
  add_common(study, true);

  CLI::App* summ = app.add_subcommand("summarize", "posterior summary table from a draw file");
  add_common(summ, false);
  summ->add_option("inputs", opts.inputs, "draws.tsv file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) spamiss::cmd_simulate(opts);
    if (fit->parsed()) spamiss::cmd_fit(opts);
    if (cmp->parsed()) spamiss::cmd_compare(opts);
    if (study->parsed()) spamiss::cmd_replicate_study(opts);
    if (summ->parsed()) spamiss::cmd_summarize(opts);
  } catch (const spamiss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
