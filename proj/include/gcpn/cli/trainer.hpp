#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gcpn/cli/run_config.hpp"
#include "gcpn/evalkit/metrics.hpp"

namespace gcpn::cli {

struct Sample {
  geomkit::GeoGraph graph;
  std::vector<double> target;    // nms: N × 3 positions
  std::vector<double> inertial;  // nms: N × 3 baseline
  std::uint32_t label = 0;       // chiral
};

// Featurised samples of one dataset file, checked against the task.
std::vector<Sample> load_samples(const RunConfig& cfg, const std::filesystem::path& path);

struct Batch {
  geomkit::GeoGraph graph;
  gcpnet::Targets targets;
};
Batch make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> ids, gcpnet::Head head);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;  // 0 = initial weights
  double best_val_loss = 0;
  std::filesystem::path checkpoint;
};

inline constexpr const char* kCheckpointName = "best.gcpk";
inline constexpr const char* kConfigName = "run.cfg";
inline constexpr const char* kMetricsName = "metrics.log";

std::string format_epoch(const EpochLog& e);

// Trains with a constant learning rate and keeps the checkpoint with the
// lowest validation loss in out_dir. Epoch lines go to out_dir/metrics.log
// and to `log`. Throws NumericError on a non-finite loss.
TrainResult train(const RunConfig& cfg, std::ostream& log);
TrainResult train(const RunConfig& cfg, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  std::ostream& log);

// Loss of the model in inference mode: mean over entries for positions,
// mean over graphs for classes.
double evaluate_loss(const gcpnet::GcpNet& model, const std::vector<Sample>& samples, std::size_t batch_size);

// nms: mse, rmse, inertial_mse, inertial_rmse, mse_ratio and per-axis
// averaged pearson/spearman/kendall of predicted vs true positions.
// chiral: accuracy and cross_entropy.
evalkit::MetricReport evaluate(const gcpnet::GcpNet& model, Task task, const std::vector<Sample>& samples,
                               std::size_t batch_size);

gcpnet::GcpNet load_model(const RunConfig& cfg, const std::filesystem::path& checkpoint);

}  // namespace gcpn::cli
