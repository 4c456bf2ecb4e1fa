#include "gcpn/geomkit/graph.hpp"

#include <string>

#include "gcpn/errors.hpp"

namespace gcpn::geomkit {

void GeoGraph::validate() const {
  const auto n = n_nodes();
  const auto m = n_edges();
  auto fail = [](const std::string& what) { throw ContractError("GeoGraph: " + what); };
  if (n == 0) fail("no nodes");
  if (h.size() != n * node_scalars) fail("node scalar buffer size");
  if (chi.size() != n * node_vectors * 3) fail("node vector buffer size");
  if (e.size() != m * edge_scalars) fail("edge scalar buffer size");
  if (xi.size() != m * edge_vectors * 3) fail("edge vector buffer size");
  if (node_graph.size() != n) fail("node_graph size");
  for (auto gid : node_graph)
    if (gid >= n_graphs) fail("graph id out of range");
  for (const auto& ed : edges) {
    if (ed.dst >= n || ed.src >= n) fail("edge index out of range");
    if (ed.dst == ed.src) fail("self-loop edge");
    if (node_graph[ed.dst] != node_graph[ed.src]) fail("edge crosses graphs");
  }
}

GeoGraph batch(std::span<const GeoGraph* const> graphs) {
  if (graphs.empty()) throw ContractError("batch: no graphs");
  GeoGraph out;
  const GeoGraph& first = *graphs[0];
  out.node_scalars = first.node_scalars;
  out.node_vectors = first.node_vectors;
  out.edge_scalars = first.edge_scalars;
  out.edge_vectors = first.edge_vectors;
  out.n_graphs = 0;
  for (const GeoGraph* g : graphs) {
    if (g->node_scalars != out.node_scalars || g->node_vectors != out.node_vectors ||
        g->edge_scalars != out.edge_scalars || g->edge_vectors != out.edge_vectors) {
      throw DimensionError("batch: feature widths differ between graphs");
    }
    const auto node_offset = static_cast<std::uint32_t>(out.positions.size());
    const auto graph_offset = static_cast<std::uint32_t>(out.n_graphs);
    out.positions.insert(out.positions.end(), g->positions.begin(), g->positions.end());
    for (const auto& ed : g->edges) out.edges.push_back({ed.dst + node_offset, ed.src + node_offset});
    out.h.insert(out.h.end(), g->h.begin(), g->h.end());
    out.chi.insert(out.chi.end(), g->chi.begin(), g->chi.end());
    out.e.insert(out.e.end(), g->e.begin(), g->e.end());
    out.xi.insert(out.xi.end(), g->xi.begin(), g->xi.end());
    for (auto gid : g->node_graph) out.node_graph.push_back(gid + graph_offset);
    out.n_graphs += g->n_graphs;
  }
  return out;
}

GeoGraph transformed(const GeoGraph& g, const Mat3& q, const Vec3& t) {
  GeoGraph out = g;
  for (auto& p : out.positions) p = apply(q, p) + t;
  auto rotate_all = [&](std::vector<double>& buf) {
    for (std::size_t i = 0; i + 2 < buf.size(); i += 3) {
      const Vec3 v = apply(q, {buf[i], buf[i + 1], buf[i + 2]});
      buf[i] = v[0];
      buf[i + 1] = v[1];
      buf[i + 2] = v[2];
    }
  };
  rotate_all(out.chi);
  rotate_all(out.xi);
  return out;
}

GeoGraph permuted(const GeoGraph& g, std::span<const std::uint32_t> perm) {
  const auto n = g.n_nodes();
  if (perm.size() != n) throw ContractError("permuted: permutation size");
  GeoGraph out = g;
  const auto ns = g.node_scalars, nv = g.node_vectors * 3;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = perm[i];
    out.positions[j] = g.positions[i];
    out.node_graph[j] = g.node_graph[i];
    std::copy_n(g.h.begin() + i * ns, ns, out.h.begin() + j * ns);
    std::copy_n(g.chi.begin() + i * nv, nv, out.chi.begin() + j * nv);
  }
  for (auto& ed : out.edges) ed = {perm[ed.dst], perm[ed.src]};
  return out;
}

std::vector<Vec3> graph_centroids(const GeoGraph& g) {
  std::vector<Vec3> sum(g.n_graphs, Vec3{0, 0, 0});
  std::vector<double> count(g.n_graphs, 0.0);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    sum[g.node_graph[i]] = sum[g.node_graph[i]] + g.positions[i];
    count[g.node_graph[i]] += 1.0;
  }
  for (std::size_t k = 0; k < g.n_graphs; ++k) {
    if (count[k] == 0) throw ContractError("graph_centroids: empty graph " + std::to_string(k));
    sum[k] = (1.0 / count[k]) * sum[k];
  }
  return sum;
}

}  // namespace gcpn::geomkit
