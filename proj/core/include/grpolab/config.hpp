#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grpolab/analysis.hpp"
#include "grpolab/engine.hpp"
#include "grpolab/env.hpp"
#include "grpolab/rewards.hpp"

namespace grpolab {

struct OptimizerConfig {
  double base_lr = 0.5;
  double clip_epsilon = 0.2;
  int inner_epochs = 1;
  LrSchedule lr_schedule = LrSchedule::InvSqrt;

  OptimizerState state() const;
  void validate() const;
};

struct RunConfig {
  long total_steps = 300;
  int questions_per_step = 8;
  int group_size = 8;  // G
  std::vector<std::uint64_t> seeds{1};

  void validate() const;
};

struct AnalysisConfig {
  int variance_batches = 200;  // M
  int groups_per_batch = 8;
  int probe_step = 0;
  std::vector<long> checkpoints{64, 128, 256, 512, 1024, 2048};
  CollapseThresholds collapse;
  std::vector<double> rho_sweep{0.0, 0.4, 0.8};
  long oracle_samples = 1000;
  long covariance_samples = 50000;
  int bootstrap_resamples = 1000;
  int sigma_probe_batches = 64;
  std::vector<std::string> scenarios{"weighted_sum", "cosine_aggressive", "kimi", "crf"};

  void validate() const;
};

struct ExperimentConfig {
  EnvConfig env;
  RewardConfig reward{.total_steps = 0};  // 0 = inherit run.total_steps
  OptimizerConfig optimizer;
  RunConfig run;
  AnalysisConfig analysis;
  std::string output_dir;

  // Fill inherited defaults (reward.total_steps from run) and validate all
  // nested sections.
  void finalize();
};

/// Load a config from .json or .toml (format inferred from the extension),
/// fill defaults, and validate. Parse errors carry line/column positions;
/// validation errors name the offending field.
ExperimentConfig load_config(const std::filesystem::path& path);

ExperimentConfig config_from_json(const nlohmann::json& root, const std::string& source_name);

nlohmann::json to_json(const ExperimentConfig& config);

/// Canonical serialization (sorted keys, shortest round-trip floats).
std::string canonical_dump(const ExperimentConfig& config);

/// FNV-1a hash of the canonical serialization, as 16 hex digits. Stable
/// across save/load round trips.
std::string config_hash(const ExperimentConfig& config);

/// Minimal TOML reader covering the config schema: tables, dotted tables,
/// string/integer/float/boolean scalars, flat arrays, and # comments.
nlohmann::json toml_to_json(const std::string& text, const std::string& source_name);

}  // namespace grpolab
