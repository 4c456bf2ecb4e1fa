#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcpn/gcpconv/gcpconv.hpp"
#include "gcpn/geomkit/graph.hpp"

namespace gcpn::gcpnet {

using diffcore::Index;
using diffcore::Tensor;
using gcp::ScalarVector;
using gcpconv::ForwardContext;

enum class Head { kGraphScalar, kNodePositions, kGraphClass };

std::string to_string(Head head);
Head parse_head(const std::string& text);

struct ModelConfig {
  std::size_t layers = 4;
  // Input feature widths (fixed by the featuriser).
  std::size_t node_scalar_in = 1;
  std::size_t node_vector_in = 1;
  std::size_t edge_scalar_in = 16;
  std::size_t edge_vector_in = 1;
  // Hidden widths.
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

  Head head = Head::kGraphScalar;
  std::size_t n_classes = 2;
  bool update_positions = false;

  bool ablate_frames = false;
  bool ablate_resgcp = false;
  bool ablate_scalars = false;
  bool ablate_vectors = false;

  void validate() const;
  gcpconv::ConvConfig conv_config() const;
};

struct TaskOutput {
  Tensor graph_scalar;    // [G,1]  (graph_scalar head)
  Tensor class_logits;    // [G,C]  (graph_class head)
  Tensor node_positions;  // [N,3]  (always: predicted, or the input positions)
  ScalarVector node_features;  // projected (h^L, χ^L)
};

// Frames built during a forward pass, recorded on request for auditing.
struct Diagnostics {
  std::vector<Tensor> frames;
};

struct Targets {
  std::vector<double> graph_values;   // [G]
  std::vector<double> positions;      // [N×3]
  std::vector<Index> labels;          // [G]
};

class GcpNet {
 public:
  GcpNet(const ModelConfig& cfg, std::uint64_t seed);

  TaskOutput forward(const geomkit::GeoGraph& graph, const ForwardContext& ctx,
                     Diagnostics* diagnostics = nullptr) const;
  // Inference pass with recording disabled.
  TaskOutput predict(const geomkit::GeoGraph& graph) const;

  const ModelConfig& config() const { return cfg_; }
  diffcore::ParamStore& params() { return params_; }
  const diffcore::ParamStore& params() const { return params_; }

 private:
  ModelConfig cfg_;
  diffcore::ParamStore params_;
  gcp::Gcp embed_nodes_, embed_edges_;
  std::vector<gcpconv::GcpConv> layers_;
  gcp::Gcp project_;
  Tensor dense1_w_, dense1_b_, dense2_w_, dense2_b_;
};

// MSE (mean over all entries) for regression heads, mean softmax
// cross-entropy for classification.
Tensor loss(const TaskOutput& out, Head head, const Targets& targets);

}  // namespace gcpn::gcpnet
