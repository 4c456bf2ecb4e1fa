#pragma once

#include <cstdint>
#include <string>

#include "gcpn/gcpnet/model.hpp"

namespace gcpn::evalkit {

struct EquivarianceReport {
  std::size_t trials = 0;
  double scalar_violation = 0;       // max |f_s(Tx) - f_s(x)| under rotation + translation
  double vector_violation = 0;       // max |f_v(Tx) - T f_v(x)|, positions included
  double reflection_gap = 0;         // max |f_s(Rx) - f_s(x)| for reflections R
  double permutation_violation = 0;  // max |f(Px) - P f(x)|
  double frame_violation = 0;        // worst orthonormality / unit / det=+1 error

  double worst_equivariance() const;
  std::string to_text() const;
  std::string to_json() const;
};

struct CheckOptions {
  std::size_t trials = 100;
  std::size_t n_nodes = 8;
  double translation_max = 10.0;  // |t| <= translation_max
  std::size_t frame_edges = 100000;
  std::uint64_t seed = 0;
};

// Fully connected random graph whose feature widths match `cfg`.
geomkit::GeoGraph random_graph(const gcpnet::ModelConfig& cfg, std::size_t n_nodes, diffcore::Rng& rng);

// Max deviations of the inference outputs of `model` on `g` versus on
// the image of `g` under x -> Q x + t. Scalars collect the projected node
// scalars and any graph-level outputs; vectors collect the projected node
// vectors and output positions.
struct TransformDeviation {
  double scalar = 0;
  double vector = 0;
};
TransformDeviation transform_deviation(const gcpnet::GcpNet& model, const geomkit::GeoGraph& g,
                                       const geomkit::Mat3& q, const geomkit::Vec3& t);

// Worst error of the edge frames over random point pairs, a share of which
// are near-degenerate (coincident, collinear with the origin, at the origin).
// Audits both the reference construction and the differentiable one.
double frame_audit(std::size_t n_edges, std::uint64_t seed);

EquivarianceReport check_model(const gcpnet::GcpNet& model, const CheckOptions& options);

}  // namespace gcpn::evalkit
