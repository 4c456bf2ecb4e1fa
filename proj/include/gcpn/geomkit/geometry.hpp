#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gcpn/diffcore/rng.hpp"

namespace gcpn::geomkit {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // row-major

// Clamp applied to every normalisation denominator in frame construction.
inline constexpr double kFrameEps = 1e-8;

// Directed edge carrying a message from `src` (j) to `dst` (i).
struct Edge {
  std::uint32_t dst;
  std::uint32_t src;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Local orthonormal basis of one directed edge.
struct Frame {
  Vec3 a, b, c;
};

inline Vec3 operator+(const Vec3& u, const Vec3& v) { return {u[0] + v[0], u[1] + v[1], u[2] + v[2]}; }
inline Vec3 operator-(const Vec3& u, const Vec3& v) { return {u[0] - v[0], u[1] - v[1], u[2] - v[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline double dot(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }
inline Vec3 cross(const Vec3& u, const Vec3& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}
double norm(const Vec3& v);
double det(const Vec3& r0, const Vec3& r1, const Vec3& r2);
double det(const Mat3& m);

Vec3 apply(const Mat3& m, const Vec3& v);
Mat3 matmul(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& m);
Mat3 identity();

struct Centered {
  std::vector<Vec3> positions;
  Vec3 centroid;
};

Centered centralize(std::span<const Vec3> x);
std::vector<Vec3> decentralize(std::span<const Vec3> x, const Vec3& centroid);

// Frame of edge (i <- j) from centred positions:
//   a = (x_i - x_j)/|.|,  b = (x_i × x_j)/|.|,  c = a × b.
// When the part of x_i × x_j orthogonal to a is shorter than kFrameEps, b is
// the part of +z (or +x when +z is nearly parallel to a) orthogonal to a.
Frame frame_for(const Vec3& xi, const Vec3& xj);
std::vector<Frame> localize(std::span<const Vec3> centered, std::span<const Edge> edges);

// Per vector: (v·a, v·b, v·c).
std::vector<double> scalarize(std::span<const Vec3> vectors, const Frame& frame);

// Each node i receives edges from its k nearest neighbours j (ties broken by
// the smaller index). Edges are grouped by destination in node order.
std::vector<Edge> knn_graph(std::span<const Vec3> x, std::size_t k);
std::vector<Edge> fully_connected(std::size_t n);

// Gaussian expansion with centres evenly spaced on [0, d_max] and width equal
// to the centre spacing.
std::vector<double> rbf_encode(double d, std::size_t n_rbf, double d_max);

struct Orientation {
  Vec3 forward;  // unit(x[i+1] - x[i]), zero for the last node
  Vec3 reverse;  // unit(x[i-1] - x[i]), zero for the first node
};
std::vector<Orientation> orientation_vectors(std::span<const Vec3> x);

// Unit vector, or zero for vectors shorter than kFrameEps.
Vec3 unit_or_zero(const Vec3& v);

Mat3 random_rotation(diffcore::Rng& rng);
// A rotation conjugate of diag(-1, 1, 1); det = -1.
Mat3 random_reflection(diffcore::Rng& rng);
Vec3 random_translation(diffcore::Rng& rng, double scale);

}  // namespace gcpn::geomkit
