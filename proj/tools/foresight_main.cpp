// Command line driver: one subcommand per pipeline stage.
//
//   foresight --config run.json [--out-dir DIR] [--seed-override N] [--workers N] <command>
//
// Errors are reported as a single JSON object on stderr and a nonzero exit.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "foresight/errors.hpp"
#include "foresight/jsonl.hpp"
#include "foresight/pipeline.hpp"

namespace {

int report_error(const std::string& command, const std::string& kind, const std::string& message) {
  nlohmann::json err{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
  return kind == "config_error" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally grounded clinical forecasting pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--out-dir", out_dir, "Output directory (overrides config out_dir)");
  app.add_option("--seed-override", seed_override, "Replace every stage seed with this value");
  app.add_option("--workers", workers, "Worker threads for intra-stage parallelism")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto* forge = app.add_subcommand("forge", "Build prediction examples and the train/test split");
  auto* train = app.add_subcommand("train", "Train the logistic policy with group-relative policy gradients");
  auto* predict = app.add_subcommand("predict", "Run forecasters over the test set");
  std::optional<std::string> forecaster;
  predict->add_option("--forecaster", forecaster, "Only run the named forecaster");
  auto* eval = app.add_subcommand("eval", "Score predictions");
  auto* judge = app.add_subcommand("judge", "Blind pairwise comparison of reasoning traces");
  auto* all = app.add_subcommand("all", "Run every stage in order");
  auto* init = app.add_subcommand("init-config", "Print the default configuration");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  if (init->parsed()) {
    std::cout << foresight::default_config().dump(2) << std::endl;
    return 0;
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (config_path.empty()) throw foresight::ConfigError("--config is required");
    foresight::RunOptions options;
    if (out_dir) options.out_dir = *out_dir;
    options.seed_override = seed_override;
    options.workers = workers;
    const auto config = foresight::RunConfig::load(config_path, options);

    if (synth->parsed()) foresight::cmd_synth(config);
    else if (forge->parsed()) foresight::cmd_forge(config);
    else if (train->parsed()) foresight::cmd_train(config);
    else if (predict->parsed()) foresight::cmd_predict(config, forecaster);
    else if (eval->parsed()) foresight::cmd_eval(config);
    else if (judge->parsed()) foresight::cmd_judge(config);
    else if (all->parsed()) foresight::cmd_all(config);
  } catch (const foresight::Error& e) {
    return report_error(command, e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(command, "internal_error", e.what());
  }
  return 0;
}
