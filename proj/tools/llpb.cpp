#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "llpb/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Delayed photon correlations in driven Kerr cavity networks"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  llpb::CliOptions opt;

  std::string config, engine, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  double tolerance = 0.0;
  app.add_option("--config", config, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--engine", engine, "analytic | regression | wfmc")
      ->check(CLI::IsMember({"analytic", "regression", "wfmc"}));
  app.add_option("--seed", seed, "base seed for trajectory streams");
  app.add_option("--threads", threads, "worker threads (default: " + std::string(llpb::kThreadsEnv) + " or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");

  app.add_subcommand("model", "describe the configured network");
  app.add_subcommand("spds", "dark-state root report");
  app.add_subcommand("g2tau", "delayed correlation g2(tau)");
  app.add_subcommand("sweep", "g2(0) over a (Delta, gamma) grid");
  app.add_subcommand("occupation", "g2(0) and signal occupation against drive amplitude");
  auto* compare = app.add_subcommand("compare", "discrepancy report between tau,g2,stderr series");
  compare->add_option("inputs", opt.inputs, "series CSV files; the first is the reference");
  compare->add_option("--tolerance", tolerance, "sup-norm gate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : llpb::kExitConfig;
  }

  opt.command = app.get_subcommands().front()->get_name();
  if (app.count("--config")) opt.config_path = config;
  if (app.count("--engine")) opt.engine = engine;
  if (app.count("--seed")) opt.seed = seed;
  if (app.count("--threads")) opt.threads = threads;
  if (app.count("--out")) opt.out_dir = out_dir;
  if (compare->count("--tolerance")) opt.tolerance = tolerance;
  return llpb::run(opt, std::cout, std::cerr);
}
