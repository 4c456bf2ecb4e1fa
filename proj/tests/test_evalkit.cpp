#include <catch_amalgamated.hpp>

#include <cmath>

#include "gcpn/errors.hpp"
#include "gcpn/evalkit/equivariance.hpp"
#include "gcpn/evalkit/metrics.hpp"
#include "support/oracles.hpp"

using namespace gcpn;
using namespace gcpn::evalkit;

TEST_CASE("hand-computed correlations") {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  CHECK(kendall(x, y) == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(spearman(x, y) == Catch::Approx(0.8).epsilon(1e-14));

  const std::vector<double> down{4, 3, 2, 1};
  CHECK(spearman(x, down) == Catch::Approx(-1.0).epsilon(1e-14));
  CHECK(kendall(x, down) == Catch::Approx(-1.0).epsilon(1e-14));

  std::vector<double> affine;
  for (double v : y) affine.push_back(2 * v + 1);
  CHECK(std::abs(pearson(y, affine) - 1.0) < 1e-12);
}

TEST_CASE("average ranks share ties") {
  const std::vector<double> x{10, 20, 10, 30, 20, 10};
  CHECK(average_ranks(x) == std::vector<double>{2, 4.5, 2, 6, 4.5, 2});
}

TEST_CASE("rank correlations match quadratic oracles with ties") {
  diffcore::Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(120);
    const auto x = oracle::tied_vector(n, 2 + rng.index(10), rng);
    const auto y = oracle::tied_vector(n, 2 + rng.index(10), rng);
    const double ref_t = oracle::kendall(x, y);
    if (!std::isfinite(ref_t)) {
      CHECK_THROWS_AS(kendall(x, y), UndefinedCorrelation);
      continue;
    }
    CHECK(std::abs(kendall(x, y) - ref_t) < 1e-12);
    CHECK(std::abs(spearman(x, y) - oracle::spearman(x, y)) < 1e-12);
  }
}

TEST_CASE("correlations are symmetric and invariant to pair order") {
  diffcore::Rng rng(9);
  auto x = oracle::tied_vector(50, 7, rng);
  auto y = oracle::tied_vector(50, 7, rng);
  const double p = pearson(x, y), s = spearman(x, y), t = kendall(x, y);
  CHECK(pearson(y, x) == Catch::Approx(p).epsilon(1e-13));
  CHECK(kendall(y, x) == Catch::Approx(t).epsilon(1e-13));
  for (std::size_t i = x.size() - 1; i > 0; --i) {
    const std::size_t j = rng.index(i + 1);
    std::swap(x[i], x[j]);
    std::swap(y[i], y[j]);
  }
  CHECK(pearson(x, y) == Catch::Approx(p).epsilon(1e-13));
  CHECK(spearman(x, y) == Catch::Approx(s).epsilon(1e-13));
  CHECK(kendall(x, y) == Catch::Approx(t).epsilon(1e-13));
}

TEST_CASE("degenerate inputs are rejected") {
  const std::vector<double> c{2, 2, 2}, x{1, 2, 3}, short_x{1};
  CHECK_THROWS_AS(pearson(c, x), UndefinedCorrelation);
  CHECK_THROWS_AS(spearman(x, c), UndefinedCorrelation);
  CHECK_THROWS_AS(kendall(c, x), UndefinedCorrelation);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), DimensionError);
  CHECK_THROWS_AS(kendall(short_x, short_x), DimensionError);
}

TEST_CASE("errors and accuracy") {
  const std::vector<double> p{1, 2, 3}, t{1, 4, 0};
  CHECK(mse(p, t) == Catch::Approx(13.0 / 3.0));
  CHECK(rmse(p, t) == Catch::Approx(std::sqrt(13.0 / 3.0)));
  CHECK(mse(p, p) == 0.0);
  const std::vector<std::uint32_t> a{0, 1, 1, 0}, b{0, 1, 0, 0};
  CHECK(accuracy(a, b) == 0.75);
}

TEST_CASE("per-axis correlations and group averages") {
  // y = x per axis, except axis z which is reversed.
  std::vector<double> pred, target;
  for (int i = 0; i < 6; ++i) {
    pred.insert(pred.end(), {double(i), double(i * i), double(i)});
    target.insert(target.end(), {double(i), double(i * i), double(-i)});
  }
  std::map<std::string, double> axes;
  const auto c = per_axis_correlations(pred, target, &axes);
  CHECK(axes.at("kendall_x") == Catch::Approx(1.0));
  CHECK(axes.at("kendall_z") == Catch::Approx(-1.0));
  CHECK(c.kendall == Catch::Approx(1.0 / 3.0));
  CHECK(c.spearman == Catch::Approx(1.0 / 3.0));

  const std::vector<double> gp{1, 2, 3, 1, 2, 3}, gt{1, 2, 3, 3, 2, 1};
  const std::vector<std::uint32_t> groups{0, 0, 0, 1, 1, 1};
  CHECK(group_average(gp, gt, groups, &pearson) == Catch::Approx(0.0).margin(1e-14));
  CHECK(group_average(gp, gt, groups, &mse) == Catch::Approx(4.0 / 3.0));
}

TEST_CASE("metric reports") {
  MetricReport r;
  r.n_samples = 3;
  r.metrics["mse"] = 0.5;
  r.metrics["accuracy"] = 1.0;
  CHECK(r.to_text() == "n_samples=3\naccuracy=1\nmse=0.5\n");
  CHECK(r.to_json().find("\"mse\": 0.5") != std::string::npos);
}

TEST_CASE("identity transform has no deviation and fresh models are equivariant") {
  gcpnet::ModelConfig cfg;
  cfg.layers = 2;
  cfg.omega = 2;
  cfg.node_scalars = 8;
  cfg.node_vectors = 4;
  cfg.edge_scalars = 8;
  cfg.edge_vectors = 2;
  cfg.head = gcpnet::Head::kNodePositions;
  cfg.update_positions = true;
  const gcpnet::GcpNet net(cfg, 1);
  diffcore::Rng rng(2);
  const auto g = random_graph(cfg, 6, rng);
  const auto d = transform_deviation(net, g, geomkit::identity(), {0, 0, 0});
  CHECK(d.scalar == 0.0);
  CHECK(d.vector == 0.0);

  CheckOptions opt;
  opt.trials = 10;
  opt.frame_edges = 2000;
  const auto rep = check_model(net, opt);
  CHECK(rep.trials == 10);
  CHECK(rep.worst_equivariance() < 1e-10);
  CHECK(rep.reflection_gap > 1e-3);
  CHECK(rep.to_text().find("reflection_gap=") != std::string::npos);
}

TEST_CASE("frame audit stays at rounding level") {
  CHECK(frame_audit(8000, 3) < 1e-12);
}
