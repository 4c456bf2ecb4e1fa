#include "gcpn/evalkit/equivariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "gcpn/gcp/gcp.hpp"

namespace gcpn::evalkit {

using geomkit::Mat3;
using geomkit::Vec3;
using geomkit::operator+;
using geomkit::operator-;
using geomkit::operator*;

double EquivarianceReport::worst_equivariance() const {
  return std::max({scalar_violation, vector_violation, permutation_violation, frame_violation});
}

std::string EquivarianceReport::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "trials=%zu\nscalar_violation=%.6e\nvector_violation=%.6e\nreflection_gap=%.6e\n"
                "permutation_violation=%.6e\nframe_violation=%.6e\n",
                trials, scalar_violation, vector_violation, reflection_gap, permutation_violation,
                frame_violation);
  return buf;
}

std::string EquivarianceReport::to_json() const {
  nlohmann::json j{{"trials", trials},
                   {"scalar_violation", scalar_violation},
                   {"vector_violation", vector_violation},
                   {"reflection_gap", reflection_gap},
                   {"permutation_violation", permutation_violation},
                   {"frame_violation", frame_violation}};
  return j.dump(2) + "\n";
}

geomkit::GeoGraph random_graph(const gcpnet::ModelConfig& cfg, std::size_t n_nodes, diffcore::Rng& rng) {
  geomkit::GeoGraph g;
  g.node_scalars = cfg.node_scalar_in;
  g.node_vectors = cfg.node_vector_in;
  g.edge_scalars = cfg.edge_scalar_in;
  g.edge_vectors = cfg.edge_vector_in;
  for (std::size_t i = 0; i < n_nodes; ++i) g.positions.push_back({rng.normal(), rng.normal(), rng.normal()});
  g.edges = geomkit::fully_connected(n_nodes);
  g.node_graph.assign(n_nodes, 0);
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = rng.normal();
  };
  fill(g.h, n_nodes * g.node_scalars);
  fill(g.chi, n_nodes * g.node_vectors * 3);
  fill(g.e, g.n_edges() * g.edge_scalars);
  fill(g.xi, g.n_edges() * g.edge_vectors * 3);
  return g;
}

namespace {

struct Outputs {
  std::vector<double> scalars;      // per node, then graph-level
  std::vector<double> node_vectors; // [N × r × 3]
  std::vector<double> positions;    // [N × 3]
  std::size_t n_nodes = 0;
};

Outputs run(const gcpnet::GcpNet& model, const geomkit::GeoGraph& g) {
  const auto out = model.predict(g);
  Outputs o;
  o.n_nodes = g.n_nodes();
  const auto s = out.node_features.s.data();
  o.scalars.assign(s.begin(), s.end());
  if (out.graph_scalar.defined()) {
    auto d = out.graph_scalar.data();
    o.scalars.insert(o.scalars.end(), d.begin(), d.end());
  }
  if (out.class_logits.defined()) {
    auto d = out.class_logits.data();
    o.scalars.insert(o.scalars.end(), d.begin(), d.end());
  }
  const auto v = out.node_features.v.data();
  o.node_vectors.assign(v.begin(), v.end());
  const auto p = out.node_positions.data();
  o.positions.assign(p.begin(), p.end());
  return o;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Applies x -> Q x (+ t) to every consecutive triple.
std::vector<double> transform_triples(const std::vector<double>& v, const Mat3& q, const Vec3& t) {
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k + 2 < v.size(); k += 3) {
    const Vec3 r = geomkit::apply(q, {v[k], v[k + 1], v[k + 2]}) + t;
    out[k] = r[0];
    out[k + 1] = r[1];
    out[k + 2] = r[2];
  }
  return out;
}

double frame_error(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 rows[3] = {a, b, c};
  double err = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(geomkit::dot(rows[i], rows[j]) - (i == j ? 1.0 : 0.0)));
  return std::max(err, std::abs(geomkit::det(a, b, c) - 1.0));
}

}  // namespace

TransformDeviation transform_deviation(const gcpnet::GcpNet& model, const geomkit::GeoGraph& g,
                                       const Mat3& q, const Vec3& t) {
  const auto base = run(model, g);
  const auto moved = run(model, geomkit::transformed(g, q, t));
  TransformDeviation d;
  d.scalar = max_abs_diff(base.scalars, moved.scalars);
  d.vector = std::max(max_abs_diff(transform_triples(base.node_vectors, q, {0, 0, 0}), moved.node_vectors),
                      max_abs_diff(transform_triples(base.positions, q, t), moved.positions));
  return d;
}

double frame_audit(std::size_t n_edges, std::uint64_t seed) {
  diffcore::Rng rng(seed);
  std::vector<double> x(n_edges * 6);
  for (std::size_t e = 0; e < n_edges; ++e) {
    Vec3 xi{rng.normal(), rng.normal(), rng.normal()};
    Vec3 xj{rng.normal(), rng.normal(), rng.normal()};
    const double tiny = std::pow(10.0, -rng.uniform(6, 14));
    switch (e % 8) {
      case 0:  // coincident up to tiny noise
        xj = xi + tiny * Vec3{rng.normal(), rng.normal(), rng.normal()};
        break;
      case 1:  // collinear with the origin
        xj = rng.uniform(-3, 3) * xi + tiny * Vec3{rng.normal(), rng.normal(), rng.normal()};
        break;
      case 2:  // exactly collinear along a coordinate axis
        xi = {0, 0, rng.normal()};
        xj = {0, 0, rng.normal()};
        break;
      case 3:  // one endpoint at the origin
        xj = {0, 0, 0};
        break;
      case 4:  // exactly coincident
        xj = xi;
        break;
      default:
        break;
    }
    for (int d = 0; d < 3; ++d) {
      x[e * 6 + d] = xi[d];
      x[e * 6 + 3 + d] = xj[d];
    }
  }
  double worst = 0;
  gcp::Topology topo;
  topo.n_nodes = n_edges * 2;
  for (std::size_t e = 0; e < n_edges; ++e) {
    topo.dst.push_back(static_cast<diffcore::Index>(2 * e));
    topo.src.push_back(static_cast<diffcore::Index>(2 * e + 1));
    const Vec3 xi{x[e * 6], x[e * 6 + 1], x[e * 6 + 2]};
    const Vec3 xj{x[e * 6 + 3], x[e * 6 + 4], x[e * 6 + 5]};
    const auto f = geomkit::frame_for(xi, xj);
    worst = std::max(worst, frame_error(f.a, f.b, f.c));
  }
  diffcore::NoGradGuard guard;
  const auto frames = gcp::frames_tensor(diffcore::Tensor::from({n_edges * 2, 3}, std::move(x)), topo);
  const auto fd = frames.data();
  for (std::size_t e = 0; e < n_edges; ++e) {
    const double* p = &fd[e * 9];
    worst = std::max(worst, frame_error({p[0], p[1], p[2]}, {p[3], p[4], p[5]}, {p[6], p[7], p[8]}));
  }
  return worst;
}

EquivarianceReport check_model(const gcpnet::GcpNet& model, const CheckOptions& options) {
  diffcore::Rng rng(options.seed);
  EquivarianceReport r;
  r.trials = options.trials;
  for (std::size_t k = 0; k < options.trials; ++k) {
    const auto g = random_graph(model.config(), options.n_nodes, rng);
    const Mat3 q = geomkit::random_rotation(rng);
    const Vec3 t = geomkit::random_translation(rng, options.translation_max);
    const auto d = transform_deviation(model, g, q, t);
    r.scalar_violation = std::max(r.scalar_violation, d.scalar);
    r.vector_violation = std::max(r.vector_violation, d.vector);

    const auto refl = transform_deviation(model, g, geomkit::random_reflection(rng), {0, 0, 0});
    r.reflection_gap = std::max(r.reflection_gap, refl.scalar);

    std::vector<std::uint32_t> perm(g.n_nodes());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const auto base = run(model, g);
    const auto moved = run(model, geomkit::permuted(g, perm));
    const std::size_t n = g.n_nodes();
    const std::size_t node_scalar_count = model.config().node_scalars;
    double pv = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = perm[i];
      for (std::size_t c = 0; c < node_scalar_count; ++c) {
        pv = std::max(pv, std::abs(base.scalars[i * node_scalar_count + c] - moved.scalars[j * node_scalar_count + c]));
      }
      const std::size_t vw = base.node_vectors.size() / n;
      for (std::size_t c = 0; c < vw; ++c) {
        pv = std::max(pv, std::abs(base.node_vectors[i * vw + c] - moved.node_vectors[j * vw + c]));
      }
      for (std::size_t c = 0; c < 3; ++c) {
        pv = std::max(pv, std::abs(base.positions[i * 3 + c] - moved.positions[j * 3 + c]));
      }
    }
    for (std::size_t c = n * node_scalar_count; c < base.scalars.size(); ++c) {
      pv = std::max(pv, std::abs(base.scalars[c] - moved.scalars[c]));
    }
    r.permutation_violation = std::max(r.permutation_violation, pv);
  }
  if (options.frame_edges > 0) r.frame_violation = frame_audit(options.frame_edges, options.seed + 1);
  return r;
}

}  // namespace gcpn::evalkit
