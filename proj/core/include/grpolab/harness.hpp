#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "grpolab/analysis.hpp"
#include "grpolab/config.hpp"

namespace grpolab {

/// Deterministic parallel map: fn(i) runs once per index, writing only to
/// slot i; partitioning is static, so results never depend on worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Shortest round-trip decimal rendering; byte-stable across runs.
std::string format_double(double value);

void write_curves_csv(const std::filesystem::path& path, const TrainHistory& history);

void write_text_file(const std::filesystem::path& path, const std::string& content);

struct CommandResult {
  std::vector<std::filesystem::path> outputs;  // the deterministic interface files
  std::filesystem::path manifest;              // operational record (carries timings)
};

/// Train per seed; emits curves_seed_<seed>.csv per seed plus summary.json.
CommandResult cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                        int workers);

/// Sweep rho values from analysis.rho_sweep, comparing the configured reward
/// against the Outcome baseline at the uniform probe; emits variance_report.json.
CommandResult cmd_variance(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int workers);

/// Paired sqrt-decay convergence runs over the configured checkpoints;
/// emits convergence_report.json.
CommandResult cmd_converge(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                           int workers);

/// Run the scenario matrix from analysis.scenarios over all seeds with the
/// collapse detectors; emits collapse_report.json.
CommandResult cmd_collapse_scan(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir, int workers);

/// Built-in scenario overlays for collapse experiments. Names:
/// "weighted_sum", "cosine_aggressive", "kimi", "crf".
ExperimentConfig scenario_config(const ExperimentConfig& base, const std::string& name);

/// Resolve the output directory: explicit override, then config.output_dir,
/// then the GRPOLAB_OUT environment variable.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::string& override_dir);

}  // namespace grpolab
