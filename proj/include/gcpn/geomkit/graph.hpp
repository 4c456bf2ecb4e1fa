#pragma once

#include <span>
#include <vector>

#include "gcpn/geomkit/geometry.hpp"

namespace gcpn::geomkit {

// Featurised geometric graph, possibly a disjoint union of several graphs.
// Flat row-major feature buffers:
//   h  [N × node_scalars], chi [N × node_vectors × 3]
//   e  [E × edge_scalars], xi  [E × edge_vectors × 3]
struct GeoGraph {
  std::vector<Vec3> positions;
  std::vector<Edge> edges;

  std::size_t node_scalars = 0;
  std::size_t node_vectors = 0;
  std::size_t edge_scalars = 0;
  std::size_t edge_vectors = 0;
  std::vector<double> h, chi, e, xi;

  // Graph id of each node; all zeros for a single graph.
  std::vector<std::uint32_t> node_graph;
  std::size_t n_graphs = 1;

  std::size_t n_nodes() const { return positions.size(); }
  std::size_t n_edges() const { return edges.size(); }

  // Throws ContractError on self-loops, out-of-range indices, buffer sizes
  // that disagree with the widths, or edges that cross graph boundaries.
  void validate() const;
};

// Disjoint union; node and edge ids are offset, graph ids renumbered.
GeoGraph batch(std::span<const GeoGraph* const> graphs);

// x -> Q x + t on positions, v -> Q v on every vector channel.
GeoGraph transformed(const GeoGraph& g, const Mat3& q, const Vec3& t);
// Node `i` of the input becomes node perm[i] of the output.
GeoGraph permuted(const GeoGraph& g, std::span<const std::uint32_t> perm);

// Per-graph centroids.
std::vector<Vec3> graph_centroids(const GeoGraph& g);

}  // namespace gcpn::geomkit
