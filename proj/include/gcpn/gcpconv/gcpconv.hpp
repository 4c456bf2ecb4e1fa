#pragma once

#include <string>
#include <vector>

#include "gcpn/gcp/gcp.hpp"

namespace gcpn::gcpconv {

using gcp::ScalarVector;
using gcp::Topology;
using diffcore::Tensor;

enum class Aggregation { kMean, kSum };

// Training-time switches threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  diffcore::Rng* rng = nullptr;
};

struct ConvConfig {
  std::size_t node_scalars = 0;  // t
  std::size_t node_vectors = 0;  // r
  std::size_t edge_scalars = 0;
  std::size_t edge_vectors = 0;
  std::size_t lambda = 3;
  std::size_t omega = 8;      // residual message updates after the first message GCP
  std::size_t ffn_depth = 1;  // residual GCPs after the linear feed-forward GCP
  Aggregation aggregation = Aggregation::kMean;
  double dropout_rate = 0.1;
  bool update_positions = false;
  bool ablate_frames = false;
  bool ablate_scalars = false;
  bool ablate_vectors = false;
  bool ablate_resgcp = false;

  void validate() const;
  gcp::GcpConfig gcp(std::size_t t_in, std::size_t r_in, std::size_t t_out, std::size_t r_out,
                     gcp::Mode mode) const;
};

// Scalars: layer norm with learned affine. Vectors: every channel divided by
// the row's RMS channel norm (floored at 1e-8), which commutes with rotation.
class EquivariantNorm {
 public:
  EquivariantNorm() = default;
  EquivariantNorm(const std::string& prefix, std::size_t scalars, diffcore::ParamStore& store,
                  diffcore::Rng& rng);
  ScalarVector forward(const ScalarVector& x) const;

 private:
  Tensor gamma_, beta_;
};

ScalarVector equivariant_norm(const ScalarVector& x, const Tensor& gamma, const Tensor& beta);
// Element dropout on scalars and whole-channel dropout on vectors, both
// rescaled by 1/(1-rate). Identity when not training or rate == 0.
ScalarVector equivariant_dropout(const ScalarVector& x, double rate, const ForwardContext& ctx);

struct ConvOutput {
  ScalarVector nodes;
  Tensor positions;
};

class GcpConv {
 public:
  GcpConv() = default;
  GcpConv(const std::string& prefix, const ConvConfig& cfg, diffcore::ParamStore& store,
          diffcore::Rng& rng);

  // Message input [s_i ∥ s_j ∥ e_ij], [V_i ∥ V_j ∥ ξ_ij] with i = dst, j = src.
  ScalarVector build_messages(const ScalarVector& nodes, const ScalarVector& edges,
                              const Tensor& frames, const Topology& topo) const;

  ConvOutput forward(const ScalarVector& nodes, const ScalarVector& edges, const Tensor& positions,
                     const Tensor& frames, const Topology& topo, const ForwardContext& ctx) const;

  const ConvConfig& config() const { return cfg_; }

 private:
  ConvConfig cfg_;
  gcp::Gcp message_;
  std::vector<gcp::ResGcp> message_updates_;
  EquivariantNorm norm_agg_, norm_ffn_;
  gcp::Gcp ffn_in_;
  std::vector<gcp::ResGcp> ffn_updates_;
  gcp::Gcp position_;
};

}  // namespace gcpn::gcpconv
