#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "grpolab/config.hpp"
#include "grpolab/env.hpp"
#include "grpolab/rng.hpp"

namespace testutil {

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("grpolab_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Small, fast experiment config for harness tests.
inline grpolab::ExperimentConfig tiny_config() {
  grpolab::ExperimentConfig config;
  config.run.total_steps = 10;
  config.run.questions_per_step = 2;
  config.run.group_size = 4;
  config.run.seeds = {1};
  config.analysis.variance_batches = 50;
  config.analysis.groups_per_batch = 2;
  config.analysis.checkpoints = {2, 4, 8};
  config.analysis.collapse.window = 4;
  config.analysis.oracle_samples = 64;
  config.analysis.covariance_samples = 2000;
  config.analysis.bootstrap_resamples = 200;
  config.analysis.sigma_probe_batches = 50;
  config.optimizer.base_lr = 0.3;
  config.finalize();
  return config;
}

}  // namespace testutil
