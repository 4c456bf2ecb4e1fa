#pragma once

#include <span>
#include <string>
#include <vector>

#include "gcpn/diffcore/ops.hpp"
#include "gcpn/diffcore/param_store.hpp"
#include "gcpn/geomkit/geometry.hpp"

namespace gcpn::gcp {

using diffcore::Index;
using diffcore::Tensor;

// Paired invariant scalars s [B,t] and equivariant vectors V [B,r,3].
struct ScalarVector {
  Tensor s;
  Tensor v;

  std::size_t rows() const { return s.dim(0); }
  std::size_t scalar_width() const { return s.dim(1); }
  std::size_t vector_width() const { return v.dim(1); }
};

ScalarVector add(const ScalarVector& x, const ScalarVector& y);
ScalarVector concat(std::span<const ScalarVector> parts);
ScalarVector gather_rows(const ScalarVector& x, std::span<const Index> rows);

// Edge lists as index arrays, edge e carrying a message src[e] -> dst[e].
struct Topology {
  std::size_t n_nodes = 0;
  std::vector<Index> dst;
  std::vector<Index> src;

  static Topology from_edges(std::size_t n_nodes, std::span<const geomkit::Edge> edges);
  std::size_t n_edges() const { return dst.size(); }
};

// Per-edge frames [E,3,3] (rows a, b, c) from centred positions [N,3].
// Differentiable with respect to the positions.
Tensor frames_tensor(const Tensor& positions, const Topology& topo);

enum class Mode { kNode, kEdge };

struct GcpConfig {
  std::size_t t_in = 0;
  std::size_t t_out = 0;
  std::size_t r_in = 0;
  std::size_t r_out = 0;
  std::size_t lambda = 3;
  Mode mode = Mode::kEdge;
  bool ablate_frames = false;
  bool ablate_scalars = false;
  bool ablate_vectors = false;
  bool has_gate = true;
  bool has_scalar_act = true;

  // Vector channels after the bottleneck: max(1, floor(r_in / lambda)).
  std::size_t hidden_vectors() const;
  // Width of the concatenated scalar input to the scalar projection.
  std::size_t scalar_concat_width() const;
  bool uses_vectors() const { return !ablate_vectors && r_in > 0; }
  bool uses_scalars() const { return !ablate_scalars && t_in > 0; }
  bool uses_frames() const { return uses_vectors() && !ablate_frames; }
  void validate() const;
};

// Geometry-complete perceptron: joint update of (s, V) where the vector
// channels are also scalarised against the local edge frames.
class Gcp {
 public:
  Gcp() = default;
  Gcp(const std::string& prefix, const GcpConfig& cfg, diffcore::ParamStore& store,
      diffcore::Rng& rng);

  // `frames` has one row per edge of `topo`. In edge mode x has one row per
  // edge; in node mode one row per node and q is averaged over incoming edges.
  ScalarVector forward(const ScalarVector& x, const Tensor& frames, const Topology& topo) const;

  const GcpConfig& config() const { return cfg_; }

 private:
  GcpConfig cfg_;
  Tensor w_dz_, w_ds_, w_s_, b_s_, w_uz_, w_g_, b_g_;
};

// x + Gcp(x). When `residual` is false (the "w/o ResGCP" ablation) the inner
// GCP output is returned unchanged.
class ResGcp {
 public:
  ResGcp() = default;
  ResGcp(const std::string& prefix, const GcpConfig& cfg, diffcore::ParamStore& store,
         diffcore::Rng& rng, bool residual = true);

  ScalarVector forward(const ScalarVector& x, const Tensor& frames, const Topology& topo) const;
  const Gcp& inner() const { return inner_; }

 private:
  Gcp inner_;
  bool residual_ = true;
};

}  // namespace gcpn::gcp
