#include "gcpn/gcpnet/model.hpp"

#include <cmath>

#include "gcpn/errors.hpp"

namespace gcpn::gcpnet {

namespace ops = diffcore;
using diffcore::Init;
using gcp::Mode;

std::string to_string(Head head) {
  switch (head) {
    case Head::kGraphScalar: return "graph_scalar";
    case Head::kNodePositions: return "node_positions";
    case Head::kGraphClass: return "graph_class";
  }
  return "?";
}

Head parse_head(const std::string& text) {
  if (text == "graph_scalar") return Head::kGraphScalar;
  if (text == "node_positions") return Head::kNodePositions;
  if (text == "graph_class") return Head::kGraphClass;
  throw ConfigError("unknown head '" + text + "'");
}

void ModelConfig::validate() const {
  if (layers < 1) throw ConfigError("model: layers must be >= 1");
  if (head == Head::kNodePositions && !update_positions) {
    throw ConfigError("model: node_positions head requires update_positions");
  }
  if (head == Head::kGraphClass && n_classes < 2) throw ConfigError("model: n_classes must be >= 2");
  if (!(dense_dropout >= 0.0 && dense_dropout < 1.0)) {
    throw ConfigError("model: dense_dropout must be in [0, 1)");
  }
  conv_config().validate();
}

gcpconv::ConvConfig ModelConfig::conv_config() const {
  gcpconv::ConvConfig c;
  c.node_scalars = node_scalars;
  c.node_vectors = node_vectors;
  c.edge_scalars = edge_scalars;
  c.edge_vectors = edge_vectors;
  c.lambda = lambda;
  c.omega = omega;
  c.ffn_depth = ffn_depth;
  c.aggregation = aggregation;
  c.dropout_rate = dropout;
  c.update_positions = update_positions;
  c.ablate_frames = ablate_frames;
  c.ablate_scalars = ablate_scalars;
  c.ablate_vectors = ablate_vectors;
  c.ablate_resgcp = ablate_resgcp;
  return c;
}

GcpNet::GcpNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  diffcore::Rng rng(seed);
  const auto conv = cfg_.conv_config();

  embed_nodes_ = gcp::Gcp("embed.node",
                          conv.gcp(cfg_.node_scalar_in, cfg_.node_vector_in, cfg_.node_scalars,
                                   cfg_.node_vectors, Mode::kNode),
                          params_, rng);
  embed_edges_ = gcp::Gcp("embed.edge",
                          conv.gcp(cfg_.edge_scalar_in, cfg_.edge_vector_in, cfg_.edge_scalars,
                                   cfg_.edge_vectors, Mode::kEdge),
                          params_, rng);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    layers_.emplace_back("layer" + std::to_string(l), conv, params_, rng);
  }
  auto proj = conv.gcp(cfg_.node_scalars, cfg_.node_vectors, cfg_.node_scalars, cfg_.node_vectors,
                       Mode::kNode);
  proj.has_gate = false;
  proj.has_scalar_act = false;
  project_ = gcp::Gcp("project", proj, params_, rng);

  if (cfg_.head != Head::kNodePositions) {
    const auto t = cfg_.node_scalars;
    const auto out = cfg_.head == Head::kGraphClass ? cfg_.n_classes : 1;
    dense1_w_ = params_.add("head.dense1.w", {t, t}, Init::kFanIn, rng);
    dense1_b_ = params_.add("head.dense1.b", {t}, Init::kZeros, rng);
    dense2_w_ = params_.add("head.dense2.w", {t, out}, Init::kFanIn, rng);
    dense2_b_ = params_.add("head.dense2.b", {out}, Init::kZeros, rng);
  }
}

namespace {

void require_finite(const Tensor& t, const std::string& where) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite activations in " + where);
  }
}

Tensor dense_dropout(const Tensor& x, double rate, const ForwardContext& ctx) {
  if (!ctx.training || rate <= 0.0) return x;
  if (!ctx.rng) throw ContractError("dense dropout: training mode needs an rng");
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = ctx.rng->bernoulli(rate) ? 0.0 : 1.0 / (1.0 - rate);
  return ops::mul(x, Tensor::from(x.shape(), std::move(mask)));
}

}  // namespace

TaskOutput GcpNet::forward(const geomkit::GeoGraph& graph, const ForwardContext& ctx,
                           Diagnostics* diagnostics) const {
  graph.validate();
  if (graph.node_scalars != cfg_.node_scalar_in || graph.node_vectors != cfg_.node_vector_in ||
      graph.edge_scalars != cfg_.edge_scalar_in || graph.edge_vectors != cfg_.edge_vector_in) {
    throw ConfigError("model: graph feature widths (" + std::to_string(graph.node_scalars) + "," +
                      std::to_string(graph.node_vectors) + "," + std::to_string(graph.edge_scalars) +
                      "," + std::to_string(graph.edge_vectors) + ") do not match the model config");
  }
  const std::size_t n = graph.n_nodes();
  const std::size_t m = graph.n_edges();
  const auto topo = gcp::Topology::from_edges(n, graph.edges);

  // Centralize (per graph).
  const auto centroids = geomkit::graph_centroids(graph);
  std::vector<double> centered(n * 3), centroid_rows(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centroids[graph.node_graph[i]];
    for (int d = 0; d < 3; ++d) {
      centered[i * 3 + d] = graph.positions[i][d] - c[d];
      centroid_rows[i * 3 + d] = c[d];
    }
  }
  const Tensor x0 = Tensor::from({n, 3}, std::move(centered));
  const Tensor centroid_tensor = Tensor::from({n, 3}, std::move(centroid_rows));

  // Localize.
  const Tensor frames = gcp::frames_tensor(x0, topo);
  if (diagnostics) diagnostics->frames.push_back(frames);

  // Embed.
  ScalarVector nodes{Tensor::from({n, graph.node_scalars}, graph.h),
                     Tensor::from({n, graph.node_vectors, 3}, graph.chi)};
  ScalarVector edges{Tensor::from({m, graph.edge_scalars}, graph.e),
                     Tensor::from({m, graph.edge_vectors, 3}, graph.xi)};
  nodes = embed_nodes_.forward(nodes, frames, topo);
  edges = embed_edges_.forward(edges, frames, topo);

  Tensor x = x0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto out = layers_[l].forward(nodes, edges, x, frames, topo, ctx);
    nodes = std::move(out.nodes);
    x = std::move(out.positions);
    const auto where = "GCPConv layer " + std::to_string(l);
    require_finite(nodes.s, where);
    require_finite(nodes.v, where);
    require_finite(x, where);
  }

  TaskOutput result;
  Tensor final_frames = frames;
  if (cfg_.update_positions) {
    final_frames = gcp::frames_tensor(x, topo);
    if (diagnostics) diagnostics->frames.push_back(final_frames);
    result.node_positions = ops::add(x, centroid_tensor);
  } else {
    result.node_positions = Tensor::from({n, 3}, [&] {
      std::vector<double> p(n * 3);
      for (std::size_t i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) p[i * 3 + d] = graph.positions[i][d];
      return p;
    }());
  }

  result.node_features = project_.forward(nodes, final_frames, topo);
  require_finite(result.node_features.s, "output projection");

  if (cfg_.head != Head::kNodePositions) {
    const Tensor pooled = ops::segment_mean(result.node_features.s, graph.node_graph, graph.n_graphs);
    Tensor hidden = ops::smooth_gate(ops::linear(pooled, dense1_w_, dense1_b_));
    hidden = dense_dropout(hidden, cfg_.dense_dropout, ctx);
    const Tensor y = ops::linear(hidden, dense2_w_, dense2_b_);
    if (cfg_.head == Head::kGraphScalar) {
      result.graph_scalar = y;
    } else {
      result.class_logits = y;
    }
  }
  return result;
}

TaskOutput GcpNet::predict(const geomkit::GeoGraph& graph) const {
  diffcore::NoGradGuard guard;
  return forward(graph, ForwardContext{});
}

Tensor loss(const TaskOutput& out, Head head, const Targets& targets) {
  switch (head) {
    case Head::kGraphScalar: {
      const auto g = out.graph_scalar.dim(0);
      if (targets.graph_values.size() != g) throw DimensionError("loss: graph target count");
      return ops::mse_loss(out.graph_scalar, Tensor::from({g, 1}, targets.graph_values));
    }
    case Head::kNodePositions: {
      if (targets.positions.size() != out.node_positions.numel()) {
        throw DimensionError("loss: position target size");
      }
      return ops::mse_loss(out.node_positions, Tensor::from(out.node_positions.shape(), targets.positions));
    }
    case Head::kGraphClass:
      return ops::cross_entropy(out.class_logits, targets.labels);
  }
  throw ContractError("loss: unknown head");
}

}  // namespace gcpn::gcpnet
