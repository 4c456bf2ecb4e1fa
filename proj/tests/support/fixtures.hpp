#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gcpn/gcp/gcp.hpp"
#include "gcpn/geomkit/geometry.hpp"

namespace fixtures {

using gcpn::diffcore::Rng;
using gcpn::diffcore::Tensor;
using gcpn::gcp::ScalarVector;
using gcpn::gcp::Topology;
using gcpn::geomkit::Mat3;
using gcpn::geomkit::Vec3;

inline Tensor normal_tensor(gcpn::diffcore::Shape shape, Rng& rng) {
  std::vector<double> v(gcpn::diffcore::shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

// Applies Q to every trailing 3-vector of `t`.
inline Tensor rotate(const Tensor& t, const Mat3& q) {
  std::vector<double> out(t.numel());
  const auto d = t.data();
  for (std::size_t k = 0; k + 2 < d.size(); k += 3) {
    const Vec3 r = gcpn::geomkit::apply(q, {d[k], d[k + 1], d[k + 2]});
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return Tensor::from(t.shape(), std::move(out));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Centred random points, fully connected, with random node and edge features.
struct Scene {
  Tensor positions;  // [N,3], centred
  Topology topo;
  ScalarVector nodes, edges;

  Tensor frames() const { return gcpn::gcp::frames_tensor(positions, topo); }

  Scene transformed(const Mat3& q) const {
    return {rotate(positions, q), topo, {nodes.s, rotate(nodes.v, q)}, {edges.s, rotate(edges.v, q)}};
  }
};

inline Scene make_scene(std::size_t n, std::size_t t, std::size_t r, std::size_t te, std::size_t re, Rng& rng) {
  std::vector<Vec3> x(n);
  for (auto& p : x) p = {rng.normal(), rng.normal(), rng.normal()};
  const auto centred = gcpn::geomkit::centralize(x).positions;
  std::vector<double> flat;
  for (const auto& p : centred) flat.insert(flat.end(), p.begin(), p.end());
  Scene s;
  s.positions = Tensor::from({n, 3}, std::move(flat));
  s.topo = Topology::from_edges(n, gcpn::geomkit::fully_connected(n));
  const std::size_t m = s.topo.n_edges();
  s.nodes = {normal_tensor({n, t}, rng), normal_tensor({n, r, 3}, rng)};
  s.edges = {normal_tensor({m, te}, rng), normal_tensor({m, re, 3}, rng)};
  return s;
}

inline const Mat3 kMirror{{{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

}  // namespace fixtures
