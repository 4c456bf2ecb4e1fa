#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gcpn/diffcore/rng.hpp"
#include "gcpn/diffcore/tensor.hpp"

namespace gcpn::diffcore {

enum class Init { kZeros, kFanIn };

// Named trainable tensors plus optimizer state. Iteration is in name order.
class ParamStore {
 public:
  // Registers a parameter. kFanIn draws uniform(±1/sqrt(shape[0])).
  Tensor& add(const std::string& name, Shape shape, Init init, Rng& rng);
  // Registers an existing tensor (used by checkpoint loading).
  Tensor& insert(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Allocates (or clears) a zero gradient for every parameter.
  void zero_grad();
  // Sets every parameter to `value`; used for fixed-point tests.
  void fill(double value);
  // Copies values from `other`; names and shapes must match exactly.
  void copy_values_from(const ParamStore& other);

  std::uint64_t step = 0;
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };
  std::map<std::string, Moments> moments;

 private:
  std::map<std::string, Tensor> params_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment update, then zeroes the gradients.
// Parameters without a gradient buffer (unused by the loss) are skipped.
void adam_step(ParamStore& store, const AdamOptions& options);

// Little-endian "GCPK" v1 checkpoint of parameter values.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);
std::vector<char> encode_checkpoint(const ParamStore& store);
ParamStore decode_checkpoint(const std::vector<char>& bytes);

}  // namespace gcpn::diffcore
