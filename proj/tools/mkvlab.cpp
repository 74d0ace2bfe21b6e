#include <iostream>

#include "CLI11.hpp"
#include "mkvlab/io/dispatch.hpp"
#include "mkvlab/io/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mkvlab: particle and Picard solvers for singular McKean-Vlasov equations"};
  app.set_version_flag("--version", std::string(mkvlab::kToolVersion));
  app.require_subcommand(1);

  mkvlab::CliRequest req;
  std::string out;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", req.config, "TOML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (replaced atomically)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_flag("--timing", req.timing, "record wall-clock times in the outputs");
  };

  for (const char* name : {"simulate", "picard", "metrics"}) {
    auto* sub = app.add_subcommand(name);
    common(sub);
  }
  const char* experiment_help = "run an experiment scenario: experiment run <scenario>";
  auto* exp = app.add_subcommand("experiment", experiment_help);
  exp->require_subcommand(1);
  auto* run = exp->add_subcommand("run", "run one scenario");
  run->add_option("scenario", req.scenario,
                  "lamb_oseen | decay_slope | entropy_cost | kstar_wasserstein | picard_contraction");
  common(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  req.command = app.get_subcommands().front()->get_name();
  if (!out.empty()) req.out = out;
  for (auto* sub : app.get_subcommands()) {
    CLI::App* leaf = sub->get_subcommands().empty() ? sub : sub->get_subcommands().front();
    if (leaf->count("--seed")) req.seed = seed;
  }
  return mkvlab::run_request(req, std::cerr);
}
