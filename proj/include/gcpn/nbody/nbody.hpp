#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcpn/geomkit/graph.hpp"

namespace gcpn::nbody {

using geomkit::Vec3;

enum class FieldKind : std::uint32_t { kES = 0, kGravityES = 1, kLorentzES = 2, kChiral = 3 };

std::string to_string(FieldKind kind);
FieldKind parse_field(const std::string& text);  // "es" | "g_es" | "l_es"

struct FieldSpec {
  FieldKind kind = FieldKind::kES;
  Vec3 gravity{0, 0, 0};
  Vec3 magnetic{0, 0, 0};
  double softening = 0.1;

  // Default magnitudes: g = (0,0,-1) for G+ES, B = (0,0,1) for L+ES.
  static FieldSpec make(FieldKind kind);
  void validate() const;
};

struct State {
  std::vector<double> charges;
  std::vector<Vec3> x;
  std::vector<Vec3> v;
};

// F_i = Σ_j c_i c_j (x_i - x_j) / (|x_i - x_j|² + ε²)^{3/2}  + c_i g + c_i (v_i × B)
// with unit masses.
std::vector<Vec3> forces(const State& s, const FieldSpec& field);
// Softened electrostatic energy plus kinetic energy (no external fields).
double electrostatic_energy(const State& s, double softening);
Vec3 total_momentum(const State& s);

// One kick-drift-kick step. The closing kick evaluates the velocity-dependent
// term at the half-step velocity. Throws SimulationError on non-finite state.
State step(const State& s, const FieldSpec& field, double dt, std::size_t step_index = 0);

struct Trajectory {
  std::vector<double> charges;        // N
  std::vector<double> positions;      // T × N × 3
  std::vector<double> velocities;     // T × N × 3
  std::size_t n_bodies = 0;
  std::size_t n_steps = 0;            // T recorded frames, frame 0 = initial state

  Vec3 position(std::size_t t, std::size_t i) const;
  Vec3 velocity(std::size_t t, std::size_t i) const;
  State state(std::size_t t) const;
};

struct SimulationParams {
  std::size_t n_bodies = 5;
  std::size_t n_steps = 1000;
  double dt = 1e-3;
  double position_scale = 1.0;
  double velocity_scale = 0.5;
};

Trajectory simulate(const State& initial, const FieldSpec& field, std::size_t n_steps, double dt);
State random_initial_state(diffcore::Rng& rng, const SimulationParams& params);

// File layout "GCPT" v1 (little-endian). `labels` is only present (one byte
// per trajectory) when the field kind is kChiral.
struct Dataset {
  FieldSpec field;
  double dt = 1e-3;
  std::size_t n_bodies = 0;
  std::size_t n_steps = 0;
  std::vector<Trajectory> trajectories;
  std::vector<std::uint8_t> labels;
};

Dataset generate_dataset(std::size_t n_traj, const SimulationParams& params, const FieldSpec& field,
                         std::uint64_t seed);

std::vector<char> encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::vector<char>& bytes);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Edge distance embedding range for many-body graphs.
inline constexpr double kNmsRbfMax = 10.0;
inline constexpr std::size_t kRbfCount = 16;

struct NmsSample {
  geomkit::GeoGraph graph;
  std::vector<double> target;    // N × 3 positions at t0 + horizon
  std::vector<double> inertial;  // N × 3, x(t0) + v(t0)·horizon·dt
};

// Node h: |v| (1); χ: v, forward, reverse orientation (3); edge e: 16 RBF of
// |x_i - x_j| ∥ c_i c_j (17); ξ: unit displacement (1). Fully connected.
NmsSample featurize_nms(const Trajectory& traj, std::size_t t0, std::size_t horizon, double dt);

}  // namespace gcpn::nbody
