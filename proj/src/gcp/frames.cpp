#include <cmath>

#include "gcpn/errors.hpp"
#include "gcpn/gcp/gcp.hpp"

namespace gcpn::gcp {

using geomkit::cross;
using geomkit::dot;
using geomkit::kFrameEps;
using geomkit::Vec3;
using geomkit::operator+;
using geomkit::operator-;
using geomkit::operator*;

Topology Topology::from_edges(std::size_t n_nodes, std::span<const geomkit::Edge> edges) {
  Topology t;
  t.n_nodes = n_nodes;
  t.dst.reserve(edges.size());
  t.src.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.dst >= n_nodes || e.src >= n_nodes) throw ContractError("edge index out of range");
    if (e.dst == e.src) throw ContractError("self-loop edge");
    t.dst.push_back(e.dst);
    t.src.push_back(e.src);
  }
  return t;
}

namespace {

Vec3 load(const double* p) { return {p[0], p[1], p[2]}; }
void store(double* p, const Vec3& v) {
  p[0] = v[0];
  p[1] = v[1];
  p[2] = v[2];
}
void accumulate(double* p, const Vec3& v) {
  p[0] += v[0];
  p[1] += v[1];
  p[2] += v[2];
}

// Intermediate quantities of one edge frame kept for the backward pass.
struct EdgeFrame {
  Vec3 a, b, c;
  double d_norm;    // |x_i - x_j|, or 0 when a fell back
  double w_norm;    // |w'|
  bool axis_ref;    // b derived from a fixed reference axis
  Vec3 ref;
  Vec3 w;           // x_i × x_j before projection
};

EdgeFrame build(const Vec3& xi, const Vec3& xj) {
  EdgeFrame f{};
  const Vec3 d = xi - xj;
  const double dn = geomkit::norm(d);
  if (dn < kFrameEps) {
    f.a = {1, 0, 0};
    f.d_norm = 0;
  } else {
    f.a = (1.0 / dn) * d;
    f.d_norm = dn;
  }
  f.w = cross(xi, xj);
  Vec3 w = f.w - dot(f.w, f.a) * f.a;
  f.axis_ref = geomkit::norm(w) < kFrameEps;
  if (f.axis_ref) {
    f.ref = std::abs(f.a[2]) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    w = f.ref - dot(f.ref, f.a) * f.a;
  }
  f.w_norm = geomkit::norm(w);
  f.b = (1.0 / f.w_norm) * w;
  f.c = cross(f.a, f.b);
  return f;
}

}  // namespace

Tensor frames_tensor(const Tensor& positions, const Topology& topo) {
  if (positions.ndim() != 2 || positions.dim(1) != 3 || positions.dim(0) != topo.n_nodes) {
    throw DimensionError("frames_tensor: positions " + diffcore::shape_str(positions.shape()) +
                         " for " + std::to_string(topo.n_nodes) + " nodes");
  }
  const std::size_t n_edges = topo.n_edges();
  std::vector<EdgeFrame> cache(n_edges);
  std::vector<double> out(n_edges * 9);
  auto xd = positions.data();
  for (std::size_t e = 0; e < n_edges; ++e) {
    cache[e] = build(load(&xd[topo.dst[e] * 3]), load(&xd[topo.src[e] * 3]));
    store(&out[e * 9], cache[e].a);
    store(&out[e * 9 + 3], cache[e].b);
    store(&out[e * 9 + 6], cache[e].c);
  }
  return diffcore::detail::make_result(
      {n_edges, 3, 3}, std::move(out), {positions},
      [cache = std::move(cache), dst = topo.dst, src = topo.src](diffcore::detail::Node& self) {
        auto& parent = *self.parents[0];
        if (!parent.requires_grad) return;
        auto& gx = parent.ensure_grad();
        const auto& xd = parent.data;
        for (std::size_t e = 0; e < cache.size(); ++e) {
          const auto& f = cache[e];
          Vec3 ga = load(&self.grad[e * 9]);
          Vec3 gb = load(&self.grad[e * 9 + 3]);
          const Vec3 gc = load(&self.grad[e * 9 + 6]);
          // c = a × b
          ga = ga + cross(f.b, gc);
          gb = gb + cross(gc, f.a);
          // b = w'/|w'|
          const Vec3 gw = (1.0 / f.w_norm) * (gb - dot(f.b, gb) * f.b);
          const Vec3 xi = load(&xd[dst[e] * 3]);
          const Vec3 xj = load(&xd[src[e] * 3]);
          // w' = u - (u·a) a with u = r or u = x_i × x_j
          const Vec3 u = f.axis_ref ? f.ref : f.w;
          ga = ga - dot(u, f.a) * gw - dot(f.a, gw) * u;
          if (!f.axis_ref) {
            const Vec3 gu = gw - dot(f.a, gw) * f.a;
            accumulate(&gx[dst[e] * 3], cross(xj, gu));
            accumulate(&gx[src[e] * 3], cross(gu, xi));
          }
          if (f.d_norm > 0) {
            const Vec3 gd = (1.0 / f.d_norm) * (ga - dot(f.a, ga) * f.a);
            accumulate(&gx[dst[e] * 3], gd);
            accumulate(&gx[src[e] * 3], -1.0 * gd);
          }
        }
      });
}

}  // namespace gcpn::gcp
