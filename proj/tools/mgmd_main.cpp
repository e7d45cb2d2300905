// mgmd: config-driven benchmark runner for machine-generated music
// detection with attribution and masking-fidelity analysis.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgmd/cli/commands.hpp"
#include "mgmd/core/error.hpp"

namespace {

int exit_code_for(mgmd::ErrorCode code) {
  switch (code) {
    case mgmd::ErrorCode::config_error:
    case mgmd::ErrorCode::unknown_architecture:
      return 2;
    case mgmd::ErrorCode::missing_artifact:
    case mgmd::ErrorCode::missing_feature_cache:
      return 3;
    default:
      return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mgmd: machine-generated music detection benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;

  const char* commands[] = {"prepare", "train", "evaluate", "roc",
                            "fuse",    "explain", "fidelity", "report"};
  const char* descriptions[] = {
      "build manifest, splits, and the mel cache",
      "train every configured model",
      "in-domain and out-of-domain metrics",
      "ROC curves and plot",
      "multimodal early-fusion experiment",
      "attribution heatmaps and overlays",
      "single- and multi-technique masking fidelity",
      "aggregate reports (markdown + CSV + JSON)",
  };
  for (size_t i = 0; i < sizeof(commands) / sizeof(commands[0]); ++i) {
    auto* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--set", overrides, "override config keys (dotted.path=value)");
    sub->add_option("--out", out_dir, "override the output directory");
  }

  CLI11_PARSE(app, argc, argv);

  std::string command = app.get_subcommands().front()->get_name();
  try {
    mgmd::ExperimentConfig cfg = mgmd::load_experiment_config(config_path, overrides, out_dir);
    mgmd::run_command(command, cfg);
  } catch (const mgmd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
