#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "gcpn/chiral/chiral.hpp"
#include "gcpn/errors.hpp"

using namespace gcpn;
using namespace gcpn::chiral;
using gcpn::geomkit::operator-;

namespace {

// Node and edge scalar features, the only inputs a model without frames or
// vector channels could see.
std::vector<double> invariant_features(const ChiralSample& s) {
  const auto g = featurize_chiral(s);
  std::vector<double> f = g.h;
  f.insert(f.end(), g.e.begin(), g.e.end());
  return f;
}

}  // namespace

TEST_CASE("canonical right-handed arms") {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {0, 1.5, 0}, {0, 0, 2}, {-1, -1, -1}};
  CHECK(handedness(p) == kLabelR);
  std::vector<Vec3> m = p;
  for (auto& x : m) x[0] = -x[0];
  CHECK(handedness(m) == kLabelS);
}

TEST_CASE("generated samples are balanced, radius sorted and paired with mirrors") {
  const auto samples = generate_chiral(200, 5);
  REQUIRE(samples.size() == 200);
  std::size_t r = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    r += s.label == kLabelR;
    CHECK(s.label == handedness(s.positions));
    for (int arm = 0; arm < 4; ++arm) {
      CHECK(geomkit::norm(s.positions[arm + 1] - s.positions[0]) == Catch::Approx(kArmRadii[arm]).epsilon(1e-12));
    }
    if (k % 2 == 1) CHECK(s.label != samples[k - 1].label);
  }
  CHECK(r == 100);
  CHECK_THROWS_AS(generate_chiral(7, 0), ConfigError);
  CHECK_THROWS_AS(generate_chiral(0, 0), ConfigError);
}

TEST_CASE("labels survive rotation and flip under reflection") {
  diffcore::Rng rng(3);
  for (const auto& s : generate_chiral(50, 6)) {
    const auto q = geomkit::random_rotation(rng);
    const auto r = geomkit::random_reflection(rng);
    std::vector<Vec3> rotated, reflected;
    for (const auto& x : s.positions) {
      rotated.push_back(geomkit::apply(q, x));
      reflected.push_back(geomkit::apply(r, x));
    }
    CHECK(handedness(rotated) == s.label);
    CHECK(handedness(reflected) != s.label);
  }
}

TEST_CASE("featurisation widths") {
  const auto g = featurize_chiral(generate_chiral(2, 1)[0]);
  CHECK_NOTHROW(g.validate());
  CHECK(g.node_scalars == 5);
  CHECK(g.node_vectors == 2);
  CHECK(g.edge_scalars == 16);
  CHECK(g.edge_vectors == 1);
  CHECK(g.n_edges() == 20);
  for (std::size_t i = 0; i < 5; ++i) CHECK(g.h[i * 5 + i] == 1.0);
}

TEST_CASE("reflection leaves every invariant feature unchanged") {
  diffcore::Rng rng(4);
  for (const auto& s : generate_chiral(20, 7)) {
    ChiralSample m = s;
    const auto r = geomkit::random_reflection(rng);
    for (auto& x : m.positions) x = geomkit::apply(r, x);
    const auto a = invariant_features(s), b = invariant_features(m);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-12);
  }
}

TEST_CASE("nearest neighbour on invariant features is at chance") {
  const auto train = generate_chiral(400, 11);
  const auto test = generate_chiral(200, 12);
  std::vector<std::vector<double>> train_f;
  for (const auto& s : train) train_f.push_back(invariant_features(s));
  std::size_t hits = 0;
  for (const auto& s : test) {
    const auto f = invariant_features(s);
    double best = 1e300;
    std::uint32_t label = 0;
    for (std::size_t k = 0; k < train.size(); ++k) {
      double d = 0;
      for (std::size_t j = 0; j < f.size(); ++j) d += (f[j] - train_f[k][j]) * (f[j] - train_f[k][j]);
      if (d < best) {
        best = d;
        label = train[k].label;
      }
    }
    hits += label == s.label;
  }
  // Mirror twins share features up to rounding, so which twin wins the
  // nearest-neighbour search is arbitrary.
  CHECK(hits >= 80);
  CHECK(hits <= 120);
}

TEST_CASE("chiral files round-trip") {
  const auto samples = generate_chiral(10, 2);
  const auto path = std::filesystem::temp_directory_path() / "gcpn_test_chiral" / "c.gcpt";
  write_chiral(samples, path);
  const auto back = read_chiral(path);
  REQUIRE(back.size() == samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    CHECK(back[k].positions == samples[k].positions);
    CHECK(back[k].label == samples[k].label);
  }
}
