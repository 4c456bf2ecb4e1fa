#include "gcpn/gcpconv/gcpconv.hpp"

#include "gcpn/errors.hpp"

namespace gcpn::gcpconv {

namespace ops = diffcore;
using diffcore::Init;

void ConvConfig::validate() const {
  if (omega < 1) throw ConfigError("GCPConv: omega must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("GCPConv: dropout_rate must be in [0, 1)");
  }
  if (node_scalars == 0) throw ConfigError("GCPConv: node scalar width must be positive");
  if (update_positions && node_vectors == 0) {
    throw ConfigError("GCPConv: position updates need node vector channels");
  }
}

gcp::GcpConfig ConvConfig::gcp(std::size_t t_in, std::size_t r_in, std::size_t t_out,
                               std::size_t r_out, gcp::Mode mode) const {
  gcp::GcpConfig c;
  c.t_in = t_in;
  c.r_in = r_in;
  c.t_out = t_out;
  c.r_out = r_out;
  c.lambda = lambda;
  c.mode = mode;
  c.ablate_frames = ablate_frames;
  c.ablate_scalars = ablate_scalars;
  c.ablate_vectors = ablate_vectors;
  return c;
}

EquivariantNorm::EquivariantNorm(const std::string& prefix, std::size_t scalars,
                                 diffcore::ParamStore& store, diffcore::Rng& rng) {
  gamma_ = store.add(prefix + ".gamma", {scalars}, Init::kZeros, rng);
  for (auto& g : gamma_.mutable_data()) g = 1.0;
  beta_ = store.add(prefix + ".beta", {scalars}, Init::kZeros, rng);
}

ScalarVector EquivariantNorm::forward(const ScalarVector& x) const {
  return equivariant_norm(x, gamma_, beta_);
}

ScalarVector equivariant_norm(const ScalarVector& x, const Tensor& gamma, const Tensor& beta) {
  ScalarVector out;
  out.s = x.scalar_width() > 0 ? ops::layer_norm(x.s, gamma, beta) : x.s;
  out.v = x.vector_width() > 0 ? ops::vector_rms_norm(x.v) : x.v;
  return out;
}

ScalarVector equivariant_dropout(const ScalarVector& x, double rate, const ForwardContext& ctx) {
  if (!ctx.training || rate <= 0.0) return x;
  if (!ctx.rng) throw ContractError("equivariant_dropout: training mode needs an rng");
  const double keep_scale = 1.0 / (1.0 - rate);
  auto& rng = *ctx.rng;

  std::vector<double> s_mask(x.s.numel());
  for (auto& m : s_mask) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  std::vector<double> v_mask(x.rows() * x.vector_width());
  for (auto& m : v_mask) m = rng.bernoulli(rate) ? 0.0 : keep_scale;

  ScalarVector out;
  out.s = ops::mul(x.s, Tensor::from(x.s.shape(), std::move(s_mask)));
  out.v = ops::scale_channels(x.v, Tensor::from({x.rows(), x.vector_width()}, std::move(v_mask)));
  return out;
}

GcpConv::GcpConv(const std::string& prefix, const ConvConfig& cfg, diffcore::ParamStore& store,
                 diffcore::Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const auto t = cfg_.node_scalars, r = cfg_.node_vectors;
  const bool residual = !cfg_.ablate_resgcp;
  using gcp::Mode;

  message_ = gcp::Gcp(prefix + ".message",
                      cfg_.gcp(2 * t + cfg_.edge_scalars, 2 * r + cfg_.edge_vectors, t, r, Mode::kEdge),
                      store, rng);
  for (std::size_t k = 0; k < cfg_.omega; ++k) {
    message_updates_.emplace_back(prefix + ".message_update" + std::to_string(k),
                                  cfg_.gcp(t, r, t, r, Mode::kEdge), store, rng, residual);
  }
  norm_agg_ = EquivariantNorm(prefix + ".norm0", t, store, rng);

  auto linear_cfg = cfg_.gcp(t, r, t, r, Mode::kNode);
  linear_cfg.has_gate = false;
  linear_cfg.has_scalar_act = false;
  ffn_in_ = gcp::Gcp(prefix + ".ffn_in", linear_cfg, store, rng);
  for (std::size_t k = 0; k < cfg_.ffn_depth; ++k) {
    ffn_updates_.emplace_back(prefix + ".ffn_update" + std::to_string(k),
                              cfg_.gcp(t, r, t, r, Mode::kNode), store, rng, residual);
  }
  norm_ffn_ = EquivariantNorm(prefix + ".norm1", t, store, rng);

  if (cfg_.update_positions) {
    position_ = gcp::Gcp(prefix + ".position", cfg_.gcp(t, r, t, 1, Mode::kNode), store, rng);
  }
}

ScalarVector GcpConv::build_messages(const ScalarVector& nodes, const ScalarVector& edges,
                                     const Tensor& frames, const Topology& topo) const {
  if (edges.rows() != topo.n_edges()) throw ContractError("GCPConv: edge feature row count");
  const ScalarVector parts[] = {gcp::gather_rows(nodes, topo.dst), gcp::gather_rows(nodes, topo.src),
                                edges};
  return message_.forward(gcp::concat(parts), frames, topo);
}

ConvOutput GcpConv::forward(const ScalarVector& nodes, const ScalarVector& edges,
                            const Tensor& positions, const Tensor& frames, const Topology& topo,
                            const ForwardContext& ctx) const {
  ScalarVector m = build_messages(nodes, edges, frames, topo);
  for (const auto& update : message_updates_) m = update.forward(m, frames, topo);

  ScalarVector agg;
  if (cfg_.aggregation == Aggregation::kMean) {
    agg = {ops::segment_mean(m.s, topo.dst, topo.n_nodes), ops::segment_mean(m.v, topo.dst, topo.n_nodes)};
  } else {
    agg = {ops::segment_sum(m.s, topo.dst, topo.n_nodes), ops::segment_sum(m.v, topo.dst, topo.n_nodes)};
  }
  const ScalarVector n_hat =
      norm_agg_.forward(gcp::add(nodes, equivariant_dropout(agg, cfg_.dropout_rate, ctx)));

  ScalarVector f = ffn_in_.forward(n_hat, frames, topo);
  for (const auto& update : ffn_updates_) f = update.forward(f, frames, topo);
  ConvOutput out;
  out.nodes = norm_ffn_.forward(gcp::add(n_hat, equivariant_dropout(f, cfg_.dropout_rate, ctx)));

  if (cfg_.update_positions) {
    const ScalarVector p = position_.forward(out.nodes, frames, topo);
    out.positions = ops::add(positions, ops::reshape(p.v, {topo.n_nodes, 3}));
  } else {
    out.positions = positions;
  }
  return out;
}

}  // namespace gcpn::gcpconv
