// grpolab: reward-shaping experiments for group-relative policy optimization
// in a synthetic math-task environment.
//
// Subcommands: train, variance, converge, collapse-scan, validate-config.
// Exit codes: 0 success, 2 usage, then per error category (see errors.hpp).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "grpolab/config.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/harness.hpp"
#include "grpolab/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seed_override;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out) {
  cmd->add_option("--config", args.config_path, "Path to a .json or .toml experiment config")
      ->required();
  if (needs_out) {
    cmd->add_option("--out", args.out_dir,
                    "Output directory (defaults to config output_dir, then $GRPOLAB_OUT)");
    cmd->add_option("--seed-override", args.seed_override,
                    "Replace the config's seed list (comma separated)")
        ->delimiter(',');
    cmd->add_option("--workers", args.workers, "Parallel workers; never changes results")
        ->check(CLI::PositiveNumber);
  }
}

grpolab::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  grpolab::ExperimentConfig config = grpolab::load_config(args.config_path);
  if (!args.seed_override.empty()) {
    config.run.seeds = args.seed_override;
    config.finalize();
  }
  return config;
}

void print_error(const grpolab::Error& e) {
  nlohmann::json out;
  out["error"] = {{"category", e.category_name()}, {"message", e.what()}};
  std::cerr << out.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-shaping laboratory for group-relative policy optimization"};
  app.set_version_flag("--version", grpolab::kArtifactVersion);
  app.require_subcommand(1);

  CommonArgs train_args, variance_args, converge_args, collapse_args, validate_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Run per-seed training; writes curves CSVs and summary.json");
  add_common(train_cmd, train_args, true);
  CLI::App* variance_cmd = app.add_subcommand(
      "variance", "Gradient-variance sweep over rho; writes variance_report.json");
  add_common(variance_cmd, variance_args, true);
  CLI::App* converge_cmd = app.add_subcommand(
      "converge", "Sqrt-decay convergence checkpoints; writes convergence_report.json");
  add_common(converge_cmd, converge_args, true);
  CLI::App* collapse_cmd = app.add_subcommand(
      "collapse-scan", "Collapse scenario matrix; writes collapse_report.json");
  add_common(collapse_cmd, collapse_args, true);
  CLI::App* validate_cmd = app.add_subcommand(
      "validate-config", "Parse and validate a config; prints the canonical form and hash");
  add_common(validate_cmd, validate_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // CLI11 prints usage; exit code 0 for --help
  }

  try {
    if (*train_cmd) {
      const auto config = load_with_overrides(train_args);
      const auto out = grpolab::resolve_output_dir(config, train_args.out_dir);
      const auto result = grpolab::cmd_train(config, out, train_args.workers);
      std::cout << "wrote " << result.outputs.size() << " files to " << out.string() << "\n";
    } else if (*variance_cmd) {
      const auto config = load_with_overrides(variance_args);
      const auto out = grpolab::resolve_output_dir(config, variance_args.out_dir);
      grpolab::cmd_variance(config, out, variance_args.workers);
      std::cout << "wrote variance_report.json to " << out.string() << "\n";
    } else if (*converge_cmd) {
      const auto config = load_with_overrides(converge_args);
      const auto out = grpolab::resolve_output_dir(config, converge_args.out_dir);
      grpolab::cmd_converge(config, out, converge_args.workers);
      std::cout << "wrote convergence_report.json to " << out.string() << "\n";
    } else if (*collapse_cmd) {
      const auto config = load_with_overrides(collapse_args);
      const auto out = grpolab::resolve_output_dir(config, collapse_args.out_dir);
      grpolab::cmd_collapse_scan(config, out, collapse_args.workers);
      std::cout << "wrote collapse_report.json to " << out.string() << "\n";
    } else if (*validate_cmd) {
      const auto config = grpolab::load_config(validate_args.config_path);
      std::cout << grpolab::canonical_dump(config) << "\n";
      std::cout << "config_hash: " << grpolab::config_hash(config) << "\n";
    }
  } catch (const grpolab::Error& e) {
    print_error(e);
    return e.exit_code();
  } catch (const std::exception& e) {
    nlohmann::json out;
    out["error"] = {{"category", "internal"}, {"message", e.what()}};
    std::cerr << out.dump() << "\n";
    return 8;
  }
  return 0;
}
