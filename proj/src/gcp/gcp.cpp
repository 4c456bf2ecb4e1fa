#include "gcpn/gcp/gcp.hpp"

#include <algorithm>

#include "gcpn/errors.hpp"

namespace gcpn::gcp {

namespace ops = diffcore;
using diffcore::Init;

ScalarVector add(const ScalarVector& x, const ScalarVector& y) {
  return {ops::add(x.s, y.s), ops::add(x.v, y.v)};
}

ScalarVector concat(std::span<const ScalarVector> parts) {
  std::vector<Tensor> s, v;
  for (const auto& p : parts) {
    s.push_back(p.s);
    v.push_back(p.v);
  }
  return {ops::concat(s), ops::concat(v)};
}

ScalarVector gather_rows(const ScalarVector& x, std::span<const Index> rows) {
  return {ops::gather_rows(x.s, rows), ops::gather_rows(x.v, rows)};
}

std::size_t GcpConfig::hidden_vectors() const {
  if (!uses_vectors()) return 0;
  return std::max<std::size_t>(1, r_in / std::max<std::size_t>(lambda, 1));
}

std::size_t GcpConfig::scalar_concat_width() const {
  return (uses_scalars() ? t_in : 0) + (uses_frames() ? 9 : 0) + hidden_vectors();
}

void GcpConfig::validate() const {
  if (lambda == 0) throw ConfigError("GCP: lambda must be >= 1");
  if (scalar_concat_width() == 0) {
    throw ConfigError("GCP: no scalar input remains after ablation (t_in=" + std::to_string(t_in) +
                      ", r_in=" + std::to_string(r_in) + ")");
  }
  if (t_out == 0 && r_out == 0) throw ConfigError("GCP: t_out and r_out are both 0");
}

Gcp::Gcp(const std::string& prefix, const GcpConfig& cfg, diffcore::ParamStore& store,
         diffcore::Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const auto h = cfg_.hidden_vectors();
  if (cfg_.uses_vectors()) {
    w_dz_ = store.add(prefix + ".w_dz", {cfg_.r_in, h}, Init::kFanIn, rng);
    if (cfg_.uses_frames()) w_ds_ = store.add(prefix + ".w_ds", {cfg_.r_in, 3}, Init::kFanIn, rng);
  }
  w_s_ = store.add(prefix + ".w_s", {cfg_.scalar_concat_width(), cfg_.t_out}, Init::kFanIn, rng);
  b_s_ = store.add(prefix + ".b_s", {cfg_.t_out}, Init::kZeros, rng);
  if (cfg_.uses_vectors() && cfg_.r_out > 0) {
    w_uz_ = store.add(prefix + ".w_uz", {h, cfg_.r_out}, Init::kFanIn, rng);
    if (cfg_.has_gate) {
      if (cfg_.t_out == 0) throw ConfigError("GCP: a vector gate needs t_out > 0");
      w_g_ = store.add(prefix + ".w_g", {cfg_.t_out, cfg_.r_out}, Init::kFanIn, rng);
      b_g_ = store.add(prefix + ".b_g", {cfg_.r_out}, Init::kZeros, rng);
    }
  }
}

ScalarVector Gcp::forward(const ScalarVector& x, const Tensor& frames, const Topology& topo) const {
  const std::size_t rows = x.rows();
  if (x.scalar_width() != cfg_.t_in || x.vector_width() != cfg_.r_in) {
    throw DimensionError("GCP: input widths (" + std::to_string(x.scalar_width()) + "," +
                         std::to_string(x.vector_width()) + ") but configured (" +
                         std::to_string(cfg_.t_in) + "," + std::to_string(cfg_.r_in) + ")");
  }
  const std::size_t expected_rows = cfg_.mode == Mode::kEdge ? topo.n_edges() : topo.n_nodes;
  if (rows != expected_rows || x.v.dim(0) != rows) {
    throw ContractError("GCP: " + std::to_string(rows) + " rows but topology provides " +
                        std::to_string(expected_rows));
  }

  std::vector<Tensor> parts;
  Tensor z;
  if (cfg_.uses_scalars()) parts.push_back(x.s);
  if (cfg_.uses_vectors()) {
    z = ops::channel_mix(x.v, w_dz_);
    if (cfg_.uses_frames()) {
      if (!frames.defined() || frames.dim(0) != topo.n_edges()) {
        throw ContractError("GCP: frame count does not match edge count");
      }
      const Tensor vs = ops::channel_mix(x.v, w_ds_);
      if (cfg_.mode == Mode::kEdge) {
        parts.push_back(ops::scalarize(vs, frames));
      } else {
        const Tensor per_edge = ops::scalarize(ops::gather_rows(vs, topo.dst), frames);
        parts.push_back(ops::segment_mean(per_edge, topo.dst, topo.n_nodes));
      }
    }
    parts.push_back(ops::vector_norm(z));
  }

  const Tensor s_v = ops::linear(ops::concat(parts), w_s_, b_s_);
  ScalarVector out;
  out.s = cfg_.has_scalar_act ? ops::smooth_gate(s_v) : s_v;
  if (cfg_.uses_vectors() && cfg_.r_out > 0) {
    Tensor v_u = ops::channel_mix(z, w_uz_);
    if (cfg_.has_gate) {
      const Tensor gate = ops::sigmoid(ops::linear(ops::relu(s_v), w_g_, b_g_));
      v_u = ops::scale_channels(v_u, gate);
    }
    out.v = v_u;
  } else {
    out.v = Tensor::zeros({rows, cfg_.r_out, 3});
  }
  return out;
}

ResGcp::ResGcp(const std::string& prefix, const GcpConfig& cfg, diffcore::ParamStore& store,
               diffcore::Rng& rng, bool residual)
    : inner_(prefix, cfg, store, rng), residual_(residual) {
  if (residual_ && (cfg.t_in != cfg.t_out || cfg.r_in != cfg.r_out)) {
    throw ConfigError("ResGCP: residual needs matching widths, got (" + std::to_string(cfg.t_in) +
                      "," + std::to_string(cfg.r_in) + ") -> (" + std::to_string(cfg.t_out) + "," +
                      std::to_string(cfg.r_out) + ")");
  }
}

ScalarVector ResGcp::forward(const ScalarVector& x, const Tensor& frames,
                             const Topology& topo) const {
  ScalarVector update = inner_.forward(x, frames, topo);
  return residual_ ? add(x, update) : update;
}

}  // namespace gcpn::gcp
