#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gcpn/gcpnet/model.hpp"

namespace gcpn::cli {

enum class Task { kNms, kChiral };
std::string to_string(Task task);
Task parse_task(const std::string& text);

// Flat `key = value` run description. Every field is one key of the same
// name; `#` starts a comment.
struct RunConfig {
  Task task = Task::kNms;

  // Model.
  std::size_t layers = 4;
  std::size_t node_scalars = 32;
  std::size_t node_vectors = 16;
  std::size_t edge_scalars = 32;
  std::size_t edge_vectors = 4;
  std::size_t lambda = 3;
  std::size_t omega = 8;
  std::size_t ffn_depth = 1;
  gcpconv::Aggregation aggregation = gcpconv::Aggregation::kMean;
  double dropout = 0.1;
  double dense_dropout = 0.1;
  // Unset means the task default: on for nms, off for chiral.
  std::optional<bool> update_positions;
  bool ablate_frames = false;
  bool ablate_resgcp = false;
  bool ablate_scalars = false;
  bool ablate_vectors = false;

  // Optimizer.
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Schedule. Checkpoint selection ignores epochs before min_epochs.
  std::size_t epochs = 100;
  std::size_t min_epochs = 0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  // Data. `horizon` = 0 predicts the final recorded step from step 0.
  std::string train_data;
  std::string val_data;
  std::string test_data;
  std::size_t horizon = 0;
  std::string out_dir = "run";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  bool resolved_update_positions() const;
  // Model configuration including the input widths fixed by the task.
  gcpnet::ModelConfig model_config() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

// Applies GCPN_SEED when set. Throws ConfigError on a malformed value.
void apply_env_overrides(RunConfig& cfg);

}  // namespace gcpn::cli
