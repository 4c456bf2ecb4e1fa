#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace gcpn::cli {

struct GenerateOptions {
  std::string field = "es";
  std::size_t bodies = 5;
  std::size_t traj = 1000;
  std::size_t steps = 1000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenerateChiralOptions {
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

struct EvalOptions {
  std::string config;
  std::string checkpoint;  // default: <out_dir>/best.gcpk
  std::string data;        // default: test_data of the config
  std::string json;        // optional structured report path
};

struct CheckOptions {
  std::string config;      // empty: default nms model
  std::string checkpoint;  // empty: freshly initialised weights
  double tol = 1e-6;
  std::size_t trials = 100;
  std::size_t frame_edges = 100000;
  std::uint64_t seed = 0;
  std::string json;
};

// Each returns a process exit code; errors propagate as exceptions.
int cmd_generate(const GenerateOptions& opt, std::ostream& out);
int cmd_generate_chiral(const GenerateChiralOptions& opt, std::ostream& out);
int cmd_train(const std::string& config_path, std::ostream& out);
int cmd_eval(const EvalOptions& opt, std::ostream& out);
// Nonzero when any equivariance violation exceeds `tol`.
int cmd_check(const CheckOptions& opt, std::ostream& out);

}  // namespace gcpn::cli
