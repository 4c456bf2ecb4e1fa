#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gcpn/geomkit/graph.hpp"

namespace gcpn::chiral {

using geomkit::Vec3;

inline constexpr std::uint32_t kLabelS = 0;
inline constexpr std::uint32_t kLabelR = 1;
inline constexpr std::size_t kPoints = 5;
inline constexpr double kArmRadii[4] = {1.0, 1.5, 2.0, 2.5};
inline constexpr double kChiralRbfMax = 20.0;
inline constexpr std::size_t kChiralRbfCount = 16;

// Centre followed by the four arms in increasing radius.
struct ChiralSample {
  std::vector<Vec3> positions;
  std::uint32_t label = kLabelS;
};

// R when det[p1 - p0, p2 - p0, p3 - p0] > 0, S otherwise.
std::uint32_t handedness(std::span<const Vec3> positions);

// n/2 random tetrahedral configurations, each followed by its mirror image;
// every sample then gets its own random rotation and translation.
std::vector<ChiralSample> generate_chiral(std::size_t n_samples, std::uint64_t seed);

// Node h: one-hot role (5); χ: forward/reverse orientation (2); edge e: 16
// RBF of |x_i - x_j| on [0, 20]; ξ: unit displacement (1). Fully connected.
geomkit::GeoGraph featurize_chiral(const ChiralSample& sample);

// Stored in the trajectory container with field kind "chiral", one recorded
// frame per sample, zero charges and velocities, and one label byte.
void write_chiral(const std::vector<ChiralSample>& samples, const std::filesystem::path& path);
std::vector<ChiralSample> read_chiral(const std::filesystem::path& path);

}  // namespace gcpn::chiral
