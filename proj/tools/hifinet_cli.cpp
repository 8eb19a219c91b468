#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hifinet/commands.hpp"
#include "hifinet/error.hpp"

namespace {

int exit_code(const hifinet::Error& e) {
  if (dynamic_cast<const hifinet::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const hifinet::DataError*>(&e)) return 3;
  if (dynamic_cast<const hifinet::DivergenceError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HiFiNet fault diagnosis toolkit"};
  app.require_subcommand(1);
  std::string config_path, workdir = ".";
  std::vector<std::string> overrides;
  double rate = -1;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "JSON experiment config");
  app.add_option("-w,--workdir", workdir, "Base directory for every relative path");
  app.add_option("--set", overrides, "Override a config field, e.g. --set edge.finetune_epochs=5");
  app.add_option("--rate", rate, "Only process this fault rate");
  app.add_flag("-q,--quiet", quiet, "No progress output");

  using Cmd = void (*)(const hifinet::CommandContext&);
  const std::pair<const char*, Cmd> commands[] = {
      {"gen-synthetic", hifinet::cmd_gen_synthetic}, {"inject", hifinet::cmd_inject},
      {"train-edge", hifinet::cmd_train_edge},       {"train-ign", hifinet::cmd_train_ign},
      {"evaluate", hifinet::cmd_evaluate},           {"tradeoff", hifinet::cmd_tradeoff},
      {"all", hifinet::cmd_all}};
  const char* help[] = {"Write the synthetic clean series as per-node CSV files",
                        "Inject faults at every configured rate",
                        "Pretrain and fine-tune the edge classifier",
                        "Train the iterative graph network on frozen edge outputs",
                        "Write metric reports for edge-only and full pipelines",
                        "Energy/accuracy table over the time-delay grid",
                        "Run inject, training, evaluation and tradeoff in order"};
  for (std::size_t k = 0; k < std::size(commands); ++k) app.add_subcommand(commands[k].first, help[k]);
  app.add_subcommand("print-config", "Print the effective config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    hifinet::CommandContext ctx;
    ctx.workdir = workdir;
    // Relative config paths resolve against the workdir like every other path.
    std::filesystem::path cfg_file;
    if (!config_path.empty())
      cfg_file = std::filesystem::path(config_path).is_absolute() ? std::filesystem::path(config_path)
                                                                  : std::filesystem::path(workdir) / config_path;
    ctx.config = hifinet::load_config(cfg_file, overrides);
    if (app.got_subcommand("print-config")) {
      std::cout << hifinet::config_to_json(ctx.config).dump(2) << '\n';
      return 0;
    }
    ctx.config.validate(ctx.workdir);
    if (rate >= 0) ctx.rate = rate;
    if (!quiet) ctx.progress = [](const std::string& m) { std::cerr << m << '\n'; };
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) fn(ctx);
    return 0;
  } catch (const hifinet::Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
