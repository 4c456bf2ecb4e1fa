#include "gcpn/chiral/chiral.hpp"

#include <algorithm>
#include <cmath>

#include "gcpn/errors.hpp"
#include "gcpn/nbody/nbody.hpp"

namespace gcpn::chiral {

using geomkit::operator+;
using geomkit::operator-;
using geomkit::operator*;

namespace {
constexpr double kDirectionJitter = 0.15;
constexpr double kTranslationScale = 5.0;
}  // namespace

std::uint32_t handedness(std::span<const Vec3> p) {
  if (p.size() < 4) throw DimensionError("handedness: need a centre and three arms");
  return geomkit::det(p[1] - p[0], p[2] - p[0], p[3] - p[0]) > 0 ? kLabelR : kLabelS;
}

std::vector<ChiralSample> generate_chiral(std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0 || n_samples % 2 != 0) {
    throw ConfigError("generate_chiral: sample count must be even and positive, got " + std::to_string(n_samples));
  }
  const double s = 1.0 / std::sqrt(3.0);
  const Vec3 tetra[4] = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  diffcore::Rng master(seed);
  std::vector<ChiralSample> out;
  out.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples / 2; ++k) {
    diffcore::Rng rng = master.fork();
    int order[4] = {0, 1, 2, 3};
    std::shuffle(order, order + 4, rng.engine());
    ChiralSample base;
    base.positions.push_back({0, 0, 0});
    for (int arm = 0; arm < 4; ++arm) {
      const Vec3 jitter{rng.normal(), rng.normal(), rng.normal()};
      const Vec3 dir = geomkit::unit_or_zero(tetra[order[arm]] + kDirectionJitter * jitter);
      base.positions.push_back(kArmRadii[arm] * dir);
    }
    base.label = handedness(base.positions);
    ChiralSample mirror = base;
    for (auto& p : mirror.positions) p[0] = -p[0];
    mirror.label = handedness(mirror.positions);
    for (ChiralSample* sample : {&base, &mirror}) {
      const auto q = geomkit::random_rotation(rng);
      const auto t = geomkit::random_translation(rng, kTranslationScale);
      for (auto& p : sample->positions) p = geomkit::apply(q, p) + t;
      out.push_back(std::move(*sample));
    }
  }
  return out;
}

geomkit::GeoGraph featurize_chiral(const ChiralSample& sample) {
  const auto& x = sample.positions;
  if (x.size() != kPoints) throw DimensionError("featurize_chiral: expected 5 points");
  geomkit::GeoGraph g;
  g.positions = x;
  g.node_scalars = kPoints;
  g.node_vectors = 2;
  g.edge_scalars = kChiralRbfCount;
  g.edge_vectors = 1;
  g.node_graph.assign(kPoints, 0);
  g.h.assign(kPoints * kPoints, 0.0);
  const auto orient = geomkit::orientation_vectors(x);
  for (std::size_t i = 0; i < kPoints; ++i) {
    g.h[i * kPoints + i] = 1.0;
    for (const Vec3& v : {orient[i].forward, orient[i].reverse}) g.chi.insert(g.chi.end(), v.begin(), v.end());
  }
  g.edges = geomkit::fully_connected(kPoints);
  for (const auto& e : g.edges) {
    const Vec3 d = x[e.dst] - x[e.src];
    const auto rbf = geomkit::rbf_encode(geomkit::norm(d), kChiralRbfCount, kChiralRbfMax);
    g.e.insert(g.e.end(), rbf.begin(), rbf.end());
    const Vec3 u = geomkit::unit_or_zero(d);
    g.xi.insert(g.xi.end(), u.begin(), u.end());
  }
  return g;
}

void write_chiral(const std::vector<ChiralSample>& samples, const std::filesystem::path& path) {
  nbody::Dataset ds;
  ds.field.kind = nbody::FieldKind::kChiral;
  ds.dt = 0.0;
  ds.n_bodies = kPoints;
  ds.n_steps = 1;
  for (const auto& s : samples) {
    if (s.positions.size() != kPoints) throw DimensionError("write_chiral: expected 5 points per sample");
    nbody::Trajectory t;
    t.n_bodies = kPoints;
    t.n_steps = 1;
    t.charges.assign(kPoints, 0.0);
    for (const auto& p : s.positions) t.positions.insert(t.positions.end(), p.begin(), p.end());
    t.velocities.assign(kPoints * 3, 0.0);
    ds.trajectories.push_back(std::move(t));
    ds.labels.push_back(static_cast<std::uint8_t>(s.label));
  }
  nbody::write_dataset(ds, path);
}

std::vector<ChiralSample> read_chiral(const std::filesystem::path& path) {
  const auto ds = nbody::read_dataset(path);
  if (ds.field.kind != nbody::FieldKind::kChiral || ds.n_bodies != kPoints || ds.n_steps != 1) {
    throw FormatError(path.string() + ": not a chiral dataset");
  }
  std::vector<ChiralSample> out;
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    ChiralSample s;
    for (std::size_t i = 0; i < kPoints; ++i) s.positions.push_back(ds.trajectories[k].position(0, i));
    if (ds.labels[k] > kLabelR) throw FormatError(path.string() + ": label out of range");
    s.label = ds.labels[k];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gcpn::chiral
