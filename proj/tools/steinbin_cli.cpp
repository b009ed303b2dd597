// steinbin_cli: bounds, exact oracles and Monte Carlo rate experiments.
//
//   steinbin_cli bound  --spec FILE [--metric tv|loc]
//   steinbin_cli exact  --kind poisson-binomial|two-runs --n N --p P
//   steinbin_cli rscan  --n N [--r 2 --a 1 --dist exponential --reps R --seed S]
//   steinbin_cli matern --lambda L [--d 1 --a 1 | --r R] [--reps R --seed S]
//   steinbin_cli rates  --app rscan|matern --scales 400,1600,6400 [...]
//
// Any flag may instead come from a key=value file given with --config;
// flags win over the file.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace cli = steinbin::cli;

int main(int argc, char** argv) {
  CLI::App app{"centered binomial approximation: bounds, exact distances, simulations"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::string config;
  };
  std::map<cli::Subcommand, Sub> subs;
  for (cli::Subcommand c : {cli::Subcommand::bound, cli::Subcommand::exact, cli::Subcommand::rscan,
                            cli::Subcommand::matern, cli::Subcommand::rates}) {
    Sub& s = subs[c];
    s.app = app.add_subcommand(cli::to_string(c));
    s.app->add_option("--config", s.config, "key=value file");
    for (const auto& key : cli::allowed_keys(c)) s.app->add_option("--" + key, s.values[key]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kOk : cli::kUsage;
  }

  for (auto& [cmd, s] : subs) {
    if (!s.app->parsed()) continue;
    cli::RunConfig cfg;
    cfg.cmd = cmd;
    try {
      if (!s.config.empty()) {
        std::ifstream in(s.config);
        if (!in) throw cli::UsageError("config: cannot open '" + s.config + "'");
        cfg.params = cli::read_config(in);
      }
    } catch (const cli::UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return cli::kUsage;
    }
    for (const auto& key : cli::allowed_keys(cmd))
      if (s.app->count("--" + key) > 0) cfg.params[key] = s.values[key];
    return cli::run(cfg, std::cout, std::cerr);
  }
  return cli::kUsage;
}
