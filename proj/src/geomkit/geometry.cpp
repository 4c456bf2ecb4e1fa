#include "gcpn/geomkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gcpn/errors.hpp"

namespace gcpn::geomkit {

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

double det(const Vec3& r0, const Vec3& r1, const Vec3& r2) { return dot(r0, cross(r1, r2)); }
double det(const Mat3& m) { return det(m[0], m[1], m[2]); }

Vec3 apply(const Mat3& m, const Vec3& v) { return {dot(m[0], v), dot(m[1], v), dot(m[2], v)}; }

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Mat3 transpose(const Mat3& m) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = m[j][i];
  return out;
}

Mat3 identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

Centered centralize(std::span<const Vec3> x) {
  if (x.empty()) throw ContractError("centralize: empty point set");
  Vec3 c{0, 0, 0};
  for (const auto& p : x) c = c + p;
  c = (1.0 / static_cast<double>(x.size())) * c;
  Centered out{{}, c};
  out.positions.reserve(x.size());
  for (const auto& p : x) out.positions.push_back(p - c);
  return out;
}

std::vector<Vec3> decentralize(std::span<const Vec3> x, const Vec3& centroid) {
  std::vector<Vec3> out;
  out.reserve(x.size());
  for (const auto& p : x) out.push_back(p + centroid);
  return out;
}

Frame frame_for(const Vec3& xi, const Vec3& xj) {
  const Vec3 d = xi - xj;
  const double dn = norm(d);
  // Coincident endpoints carry no direction; fall back to +x so the basis
  // stays orthonormal.
  const Vec3 a = dn < kFrameEps ? Vec3{1, 0, 0} : (1.0 / dn) * d;

  // The part of x_i × x_j orthogonal to a. In exact arithmetic the
  // projection is the identity; it matters once a fell back or the points are
  // nearly collinear with the origin.
  Vec3 w = cross(xi, xj);
  w = w - dot(w, a) * a;
  if (norm(w) < kFrameEps) {
    const Vec3 ref = std::abs(a[2]) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    w = ref - dot(ref, a) * a;
  }
  const Vec3 b = (1.0 / norm(w)) * w;
  return {a, b, cross(a, b)};
}

std::vector<Frame> localize(std::span<const Vec3> centered, std::span<const Edge> edges) {
  std::vector<Frame> frames;
  frames.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.dst >= centered.size() || e.src >= centered.size()) {
      throw ContractError("localize: edge index out of range");
    }
    frames.push_back(frame_for(centered[e.dst], centered[e.src]));
  }
  return frames;
}

std::vector<double> scalarize(std::span<const Vec3> vectors, const Frame& frame) {
  std::vector<double> out;
  out.reserve(vectors.size() * 3);
  for (const auto& v : vectors) {
    out.push_back(dot(v, frame.a));
    out.push_back(dot(v, frame.b));
    out.push_back(dot(v, frame.c));
  }
  return out;
}

std::vector<Edge> knn_graph(std::span<const Vec3> x, std::size_t k) {
  const std::size_t n = x.size();
  if (k < 1 || k >= n) {
    throw ParameterError("knn_graph: need 1 <= k < N, got k=" + std::to_string(k) +
                         " N=" + std::to_string(n));
  }
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 d = x[i] - x[j];
      cand[m++] = {dot(d, d), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t r = 0; r < k; ++r) edges.push_back({i, cand[r].second});
  }
  return edges;
}

std::vector<Edge> fully_connected(std::size_t n) {
  std::vector<Edge> edges;
  edges.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (i != j) edges.push_back({i, j});
  return edges;
}

std::vector<double> rbf_encode(double d, std::size_t n_rbf, double d_max) {
  if (n_rbf < 2) throw ParameterError("rbf_encode: n_rbf must be >= 2");
  if (!(d_max > 0)) throw ParameterError("rbf_encode: d_max must be positive");
  if (d < 0) throw ContractError("rbf_encode: negative distance");
  const double spacing = d_max / static_cast<double>(n_rbf - 1);
  std::vector<double> out(n_rbf);
  for (std::size_t k = 0; k < n_rbf; ++k) {
    const double z = (d - spacing * static_cast<double>(k)) / spacing;
    out[k] = std::exp(-0.5 * z * z);
  }
  return out;
}

Vec3 unit_or_zero(const Vec3& v) {
  const double n = norm(v);
  return n < kFrameEps ? Vec3{0, 0, 0} : (1.0 / n) * v;
}

std::vector<Orientation> orientation_vectors(std::span<const Vec3> x) {
  std::vector<Orientation> out(x.size(), Orientation{{0, 0, 0}, {0, 0, 0}});
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i + 1 < x.size()) out[i].forward = unit_or_zero(x[i + 1] - x[i]);
    if (i > 0) out[i].reverse = unit_or_zero(x[i - 1] - x[i]);
  }
  return out;
}

Mat3 random_rotation(diffcore::Rng& rng) {
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& v : q) {
      v = rng.normal();
      n2 += v * v;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

Mat3 random_reflection(diffcore::Rng& rng) {
  const Mat3 q = random_rotation(rng);
  const Mat3 flip{{{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  return matmul(matmul(q, flip), transpose(q));
}

Vec3 random_translation(diffcore::Rng& rng, double scale) {
  Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
  const double n = std::max(norm(dir), 1e-12);
  const double r = scale * std::cbrt(rng.uniform());
  return (r / n) * dir;
}

}  // namespace gcpn::geomkit
