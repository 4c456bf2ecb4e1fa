#include "gcpn/nbody/nbody.hpp"

#include <cmath>

#include "gcpn/binary_io.hpp"
#include "gcpn/errors.hpp"

namespace gcpn::nbody {

using geomkit::cross;
using geomkit::dot;
using geomkit::operator+;
using geomkit::operator-;
using geomkit::operator*;

namespace {
constexpr std::uint32_t kDatasetVersion = 1;
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kES: return "es";
    case FieldKind::kGravityES: return "g_es";
    case FieldKind::kLorentzES: return "l_es";
    case FieldKind::kChiral: return "chiral";
  }
  return "?";
}

FieldKind parse_field(const std::string& text) {
  if (text == "es") return FieldKind::kES;
  if (text == "g_es") return FieldKind::kGravityES;
  if (text == "l_es") return FieldKind::kLorentzES;
  throw ConfigError("unknown field '" + text + "' (expected es, g_es or l_es)");
}

FieldSpec FieldSpec::make(FieldKind kind) {
  FieldSpec f;
  f.kind = kind;
  if (kind == FieldKind::kGravityES) f.gravity = {0, 0, -1};
  if (kind == FieldKind::kLorentzES) f.magnetic = {0, 0, 1};
  return f;
}

void FieldSpec::validate() const {
  const Vec3 zero{0, 0, 0};
  if (kind == FieldKind::kES && (gravity != zero || magnetic != zero)) {
    throw ConfigError("ES field must have zero gravity and magnetic components");
  }
  if (!(softening >= 0)) throw ConfigError("softening must be non-negative");
}

std::vector<Vec3> forces(const State& s, const FieldSpec& field) {
  const std::size_t n = s.x.size();
  std::vector<Vec3> f(n, Vec3{0, 0, 0});
  const double eps2 = field.softening * field.softening;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 d = s.x[i] - s.x[j];
      const double r2 = dot(d, d) + eps2;
      const Vec3 fij = (s.charges[i] * s.charges[j] / (r2 * std::sqrt(r2))) * d;
      f[i] = f[i] + fij;
      f[j] = f[j] - fij;
    }
  }
  if (field.kind == FieldKind::kGravityES) {
    for (std::size_t i = 0; i < n; ++i) f[i] = f[i] + s.charges[i] * field.gravity;
  }
  if (field.kind == FieldKind::kLorentzES) {
    for (std::size_t i = 0; i < n; ++i) f[i] = f[i] + s.charges[i] * cross(s.v[i], field.magnetic);
  }
  return f;
}

double electrostatic_energy(const State& s, double softening) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    e += 0.5 * dot(s.v[i], s.v[i]);
    for (std::size_t j = i + 1; j < s.x.size(); ++j) {
      const Vec3 d = s.x[i] - s.x[j];
      e += s.charges[i] * s.charges[j] / std::sqrt(dot(d, d) + softening * softening);
    }
  }
  return e;
}

Vec3 total_momentum(const State& s) {
  Vec3 p{0, 0, 0};
  for (const auto& v : s.v) p = p + v;
  return p;
}

State step(const State& s, const FieldSpec& field, double dt, std::size_t step_index) {
  State next = s;
  const auto f0 = forces(s, field);
  for (std::size_t i = 0; i < s.x.size(); ++i) next.v[i] = s.v[i] + (0.5 * dt) * f0[i];
  for (std::size_t i = 0; i < s.x.size(); ++i) next.x[i] = s.x[i] + dt * next.v[i];
  const auto f1 = forces(next, field);
  for (std::size_t i = 0; i < s.x.size(); ++i) next.v[i] = next.v[i] + (0.5 * dt) * f1[i];
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    for (int d = 0; d < 3; ++d) {
      if (!std::isfinite(next.x[i][d]) || !std::isfinite(next.v[i][d])) {
        throw SimulationError("non-finite state at step " + std::to_string(step_index) +
                              ", body " + std::to_string(i));
      }
    }
  }
  return next;
}

Vec3 Trajectory::position(std::size_t t, std::size_t i) const {
  const double* p = &positions[(t * n_bodies + i) * 3];
  return {p[0], p[1], p[2]};
}

Vec3 Trajectory::velocity(std::size_t t, std::size_t i) const {
  const double* p = &velocities[(t * n_bodies + i) * 3];
  return {p[0], p[1], p[2]};
}

State Trajectory::state(std::size_t t) const {
  State s;
  s.charges = charges;
  for (std::size_t i = 0; i < n_bodies; ++i) {
    s.x.push_back(position(t, i));
    s.v.push_back(velocity(t, i));
  }
  return s;
}

Trajectory simulate(const State& initial, const FieldSpec& field, std::size_t n_steps, double dt) {
  if (n_steps < 2) throw ConfigError("simulate: need at least 2 recorded steps");
  if (!(dt > 0)) throw ConfigError("simulate: dt must be positive");
  field.validate();
  Trajectory traj;
  traj.charges = initial.charges;
  traj.n_bodies = initial.x.size();
  traj.n_steps = n_steps;
  traj.positions.reserve(n_steps * traj.n_bodies * 3);
  traj.velocities.reserve(n_steps * traj.n_bodies * 3);
  auto record = [&](const State& s) {
    for (std::size_t i = 0; i < traj.n_bodies; ++i) {
      traj.positions.insert(traj.positions.end(), s.x[i].begin(), s.x[i].end());
      traj.velocities.insert(traj.velocities.end(), s.v[i].begin(), s.v[i].end());
    }
  };
  State s = initial;
  record(s);
  for (std::size_t t = 1; t < n_steps; ++t) {
    s = step(s, field, dt, t);
    record(s);
  }
  return traj;
}

State random_initial_state(diffcore::Rng& rng, const SimulationParams& params) {
  State s;
  for (std::size_t i = 0; i < params.n_bodies; ++i) {
    s.charges.push_back(rng.bernoulli(0.5) ? 1.0 : -1.0);
    s.x.push_back({rng.normal(0, params.position_scale), rng.normal(0, params.position_scale),
                   rng.normal(0, params.position_scale)});
    s.v.push_back({rng.normal(0, params.velocity_scale), rng.normal(0, params.velocity_scale),
                   rng.normal(0, params.velocity_scale)});
  }
  return s;
}

Dataset generate_dataset(std::size_t n_traj, const SimulationParams& params, const FieldSpec& field,
                         std::uint64_t seed) {
  if (n_traj == 0 || params.n_bodies < 2) {
    throw ConfigError("generate_dataset: need at least one trajectory and two bodies");
  }
  Dataset ds;
  ds.field = field;
  ds.dt = params.dt;
  ds.n_bodies = params.n_bodies;
  ds.n_steps = params.n_steps;
  diffcore::Rng master(seed);
  ds.trajectories.reserve(n_traj);
  for (std::size_t k = 0; k < n_traj; ++k) {
    diffcore::Rng rng = master.fork();
    ds.trajectories.push_back(simulate(random_initial_state(rng, params), field, params.n_steps, params.dt));
  }
  return ds;
}

std::vector<char> encode_dataset(const Dataset& ds) {
  binary::Writer w;
  w.magic("GCPT");
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.field.kind));
  w.f64(ds.dt);
  w.u32(static_cast<std::uint32_t>(ds.trajectories.size()));
  w.u32(static_cast<std::uint32_t>(ds.n_bodies));
  w.u32(static_cast<std::uint32_t>(ds.n_steps));
  for (double g : ds.field.gravity) w.f64(g);
  for (double b : ds.field.magnetic) w.f64(b);
  const bool labelled = ds.field.kind == FieldKind::kChiral;
  if (labelled && ds.labels.size() != ds.trajectories.size()) {
    throw ContractError("encode_dataset: chiral dataset needs one label per sample");
  }
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    const auto& t = ds.trajectories[k];
    if (t.n_bodies != ds.n_bodies || t.n_steps != ds.n_steps) {
      throw ContractError("encode_dataset: trajectory shape differs from header");
    }
    w.f64s(t.charges.data(), t.charges.size());
    w.f64s(t.positions.data(), t.positions.size());
    w.f64s(t.velocities.data(), t.velocities.size());
    if (labelled) w.u8(ds.labels[k]);
  }
  return w.take();
}

Dataset decode_dataset(const std::vector<char>& bytes) {
  binary::Reader r(bytes, "dataset");
  r.expect_magic("GCPT");
  const auto version = r.u32();
  if (version != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
  Dataset ds;
  const auto kind = r.u32();
  if (kind > static_cast<std::uint32_t>(FieldKind::kChiral)) {
    throw FormatError("dataset: unknown field kind " + std::to_string(kind));
  }
  ds.field.kind = static_cast<FieldKind>(kind);
  ds.dt = r.f64();
  const auto n_traj = r.u32();
  ds.n_bodies = r.u32();
  ds.n_steps = r.u32();
  for (auto& g : ds.field.gravity) g = r.f64();
  for (auto& b : ds.field.magnetic) b = r.f64();
  const bool labelled = ds.field.kind == FieldKind::kChiral;
  const std::size_t frame = ds.n_bodies * ds.n_steps * 3;
  const std::size_t per_traj = 8 * (ds.n_bodies + 2 * frame) + (labelled ? 1 : 0);
  if (r.remaining() != per_traj * n_traj) {
    throw FormatError("dataset: body is " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(per_traj * n_traj));
  }
  ds.trajectories.resize(n_traj);
  for (std::uint32_t k = 0; k < n_traj; ++k) {
    auto& t = ds.trajectories[k];
    t.n_bodies = ds.n_bodies;
    t.n_steps = ds.n_steps;
    t.charges.resize(ds.n_bodies);
    t.positions.resize(frame);
    t.velocities.resize(frame);
    r.f64s(t.charges.data(), t.charges.size());
    r.f64s(t.positions.data(), frame);
    r.f64s(t.velocities.data(), frame);
    if (labelled) ds.labels.push_back(r.u8());
  }
  r.expect_end();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  binary::write_file(path, encode_dataset(ds));
}

Dataset read_dataset(const std::filesystem::path& path) {
  try {
    return decode_dataset(binary::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

NmsSample featurize_nms(const Trajectory& traj, std::size_t t0, std::size_t horizon, double dt) {
  if (horizon == 0 || t0 + horizon >= traj.n_steps) {
    throw ContractError("featurize_nms: t0 + horizon = " + std::to_string(t0 + horizon) +
                        " outside trajectory of " + std::to_string(traj.n_steps) + " steps");
  }
  const std::size_t n = traj.n_bodies;
  NmsSample out;
  auto& g = out.graph;
  g.node_scalars = 1;
  g.node_vectors = 3;
  g.edge_scalars = kRbfCount + 1;
  g.edge_vectors = 1;
  g.node_graph.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) g.positions.push_back(traj.position(t0, i));
  const auto orient = geomkit::orientation_vectors(g.positions);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = traj.velocity(t0, i);
    g.h.push_back(geomkit::norm(v));
    for (const Vec3& ch : {v, orient[i].forward, orient[i].reverse}) g.chi.insert(g.chi.end(), ch.begin(), ch.end());
  }
  g.edges = geomkit::fully_connected(n);
  for (const auto& e : g.edges) {
    const Vec3 d = g.positions[e.dst] - g.positions[e.src];
    const auto rbf = geomkit::rbf_encode(geomkit::norm(d), kRbfCount, kNmsRbfMax);
    g.e.insert(g.e.end(), rbf.begin(), rbf.end());
    g.e.push_back(traj.charges[e.dst] * traj.charges[e.src]);
    const Vec3 u = geomkit::unit_or_zero(d);
    g.xi.insert(g.xi.end(), u.begin(), u.end());
  }
  const double horizon_time = static_cast<double>(horizon) * dt;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 target = traj.position(t0 + horizon, i);
    const Vec3 guess = traj.position(t0, i) + horizon_time * traj.velocity(t0, i);
    out.target.insert(out.target.end(), target.begin(), target.end());
    out.inertial.insert(out.inertial.end(), guess.begin(), guess.end());
  }
  return out;
}

}  // namespace gcpn::nbody
