// Command-line driver: runs config-described experiments and writes
// machine-readable reports plus plot-ready series under <out>/<config-hash>/.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stab/experiment.hpp"
#include "stab/version.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool list = false;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_list) {
  cmd->add_option("--config", args->config, "Path to the JSON experiment config");
  cmd->add_option("--out", args->out, "Output directory (default: out)");
  cmd->add_option("--seed", args->seed, "Root seed override (replaces the config seed)");
  cmd->add_option("--threads", args->threads, "Worker threads for independent cells")
      ->check(CLI::PositiveNumber);
  if (with_list) {
    cmd->add_flag("--list", args->list, "List acceptance criteria without running");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-of-stability dynamics toolkit"};
  app.set_version_flag("--version", std::string(stab::kVersion));
  app.require_subcommand(1);

  const char* commands[] = {"analyze-minimum", "bifurcation",    "simulate-gd",
                            "simulate-sgd",    "sgd-thresholds", "moment-operator",
                            "verify-all"};
  const char* descriptions[] = {
      "Profile a minimum and decide the oscillation-vs-escape verdict",
      "Classify long-run dynamics over a step-size grid",
      "Run full-batch gradient descent from a given start",
      "Run minibatch SGD with a seeded batch stream",
      "Compute per-batch and mean-square step-size thresholds",
      "Assemble the moment-transfer truncation and its certificates",
      "Run the end-to-end verification suite"};

  CommonArgs args[7];
  for (int i = 0; i < 7; ++i) {
    CLI::App* cmd = app.add_subcommand(commands[i], descriptions[i]);
    add_common(cmd, &args[i], std::string(commands[i]) == "verify-all");
  }

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 7; ++i) {
    if (!app.get_subcommand(commands[i])->parsed()) continue;
    if (args[i].list) {
      std::cout << stab::acceptance_listing();
      return stab::kExitSuccess;
    }
    if (args[i].config.empty()) {
      std::cerr << "error: --config is required\n";
      return stab::kExitConfigError;
    }
    std::string error, output;
    const int code = stab::run_command(commands[i], args[i].config, args[i].out,
                                       args[i].seed, args[i].threads, &error, &output);
    std::cout << output;
    if (!error.empty()) std::cerr << "error: " << error << '\n';
    return code;
  }
  return stab::kExitConfigError;
}
