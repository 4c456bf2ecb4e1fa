// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "gcpn/chiral/chiral.hpp"
#include "gcpn/cli/trainer.hpp"
#include "gcpn/diffcore/param_store.hpp"
#include "gcpn/errors.hpp"
#include "gcpn/evalkit/equivariance.hpp"
#include "gcpn/evalkit/metrics.hpp"
#include "gcpn/gcp/gcp.hpp"
#include "gcpn/nbody/nbody.hpp"
#include "support/oracles.hpp"
#include "support/primitive_cases.hpp"

using namespace gcpn;
namespace fs = std::filesystem;
using geomkit::Vec3;
using geomkit::operator-;

namespace {

const fs::path kWork = "acceptance_work";

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gcpnet::ModelConfig nms_model() { return cli::RunConfig{}.model_config(); }

// 1. SE(3) equivariance of an untrained model.
Outcome equivariance() {
  Clock clock;
  const gcpnet::GcpNet net(nms_model(), 1);
  evalkit::CheckOptions opt;
  opt.trials = 100;
  opt.n_nodes = 8;
  opt.translation_max = 10.0;
  opt.frame_edges = 0;
  opt.seed = 11;
  const auto r = evalkit::check_model(net, opt);
  const double t = clock.seconds();
  return {r.scalar_violation < 1e-8 && r.vector_violation < 1e-8 && t < 60,
          "scalar=" + fmt("%.3g", r.scalar_violation) + " vector=" + fmt("%.3g", r.vector_violation) +
              " time=" + fmt("%.1f", t) + "s"};
}

// 2. Chirality: frames separate mirror images, the ablation cannot.
Outcome chirality() {
  Clock clock;
  const auto dir = kWork / "chiral";
  fs::create_directories(dir);
  chiral::write_chiral(chiral::generate_chiral(8000, 101), dir / "train.gcpt");
  chiral::write_chiral(chiral::generate_chiral(1000, 202), dir / "val.gcpt");
  chiral::write_chiral(chiral::generate_chiral(1000, 303), dir / "test.gcpt");

  const auto run = [&](bool ablate) {
    cli::RunConfig c;
    c.task = cli::Task::kChiral;
    c.layers = 2;
    c.omega = 2;
    c.lr = 1e-3;
    c.epochs = 3;
    c.ablate_frames = ablate;
    c.train_data = (dir / "train.gcpt").string();
    c.val_data = (dir / "val.gcpt").string();
    c.out_dir = (dir / (ablate ? "ablated" : "full")).string();
    std::ostringstream log;
    const auto result = cli::train(c, log);
    const auto model = cli::load_model(c, result.checkpoint);
    return cli::evaluate(model, c.task, cli::load_samples(c, dir / "test.gcpt"), 64).metrics.at("accuracy");
  };
  const double full = run(false);
  const double ablated = run(true);
  const double t = clock.seconds();
  return {full >= 0.95 && ablated >= 0.45 && ablated <= 0.55 && t < 1800,
          "full=" + fmt("%.4f", full) + " ablate_frames=" + fmt("%.4f", ablated) + " time=" + fmt("%.0f", t) + "s"};
}

// 3. Reflections change outputs only when frames are used.
Outcome reflection() {
  evalkit::CheckOptions opt;
  opt.trials = 100;
  opt.frame_edges = 0;
  opt.seed = 12;
  auto cfg = nms_model();
  const double with = evalkit::check_model(gcpnet::GcpNet(cfg, 1), opt).reflection_gap;
  cfg.ablate_frames = true;
  const double without = evalkit::check_model(gcpnet::GcpNet(cfg, 1), opt).reflection_gap;
  return {with > 1e-3 && without < 1e-8, "with_frames=" + fmt("%.3g", with) + " without=" + fmt("%.3g", without)};
}

// 4. Frame orthonormality on many edges, degenerate ones included.
Outcome frames() {
  const double worst = evalkit::frame_audit(100000, 13);
  return {worst < 1e-10, "worst=" + fmt("%.3g", worst) + " edges=100000"};
}

// 5. Reverse-mode gradients against central differences.
Outcome gradients() {
  double worst = 0;
  std::string worst_name;
  const auto note = [&](const std::string& name, double err) {
    if (err > worst || worst_name.empty()) {
      worst = std::max(worst, err);
      worst_name = name;
    }
  };
  for (const auto& k : gradcheck::primitive_cases()) note(k.name, gradcheck::max_relative_error(k.f, k.in));

  diffcore::Rng rng(14);
  auto pos = gradcheck::random_tensor({6, 3}, rng);
  const auto topo = gcp::Topology::from_edges(6, geomkit::fully_connected(6));
  note("frames", gradcheck::max_relative_error(
                     [&](const std::vector<diffcore::Tensor>& in) { return gcp::frames_tensor(in[0], topo); }, {pos}));

  for (auto head : {gcpnet::Head::kGraphScalar, gcpnet::Head::kNodePositions, gcpnet::Head::kGraphClass}) {
    gcpnet::ModelConfig cfg;
    cfg.layers = 1;
    cfg.node_scalars = 8;
    cfg.node_vectors = 4;
    cfg.edge_scalars = 8;
    cfg.edge_vectors = 2;
    cfg.omega = 2;
    cfg.head = head;
    cfg.update_positions = head != gcpnet::Head::kGraphClass;
    gcpnet::GcpNet net(cfg, 15);
    const auto g = evalkit::random_graph(cfg, 6, rng);
    std::vector<double> x0;
    for (const auto& p : g.positions) x0.insert(x0.end(), p.begin(), p.end());
    const auto start = diffcore::Tensor::from({g.n_nodes(), 3}, std::move(x0));
    // Displacements rather than absolute positions, and the projected
    // features alongside the head: a large constant offset would bury the
    // position gradients under round-off in the differences.
    const auto output = [&](const std::vector<diffcore::Tensor>&) {
      const auto out = net.forward(g, {});
      const auto& v = out.node_features.v;
      std::vector<diffcore::Tensor> parts{diffcore::sub(out.node_positions, start), out.node_features.s,
                                          diffcore::reshape(v, {v.dim(0), v.dim(1) * 3})};
      if (head == gcpnet::Head::kGraphScalar) parts.push_back(out.graph_scalar);
      if (head == gcpnet::Head::kGraphClass) parts.push_back(out.class_logits);
      for (auto& t : parts) t = diffcore::reshape(t, {1, t.numel()});
      return diffcore::concat(std::span<const diffcore::Tensor>(parts));
    };
    // Parameters off the path of this head get no gradient; leave them out.
    diffcore::backward(gradcheck::weighted(output({}), 1));
    std::vector<diffcore::Tensor> used;
    for (auto& [name, p] : net.params()) {
      if (p.has_grad()) used.push_back(p);
    }
    note("model:" + gcpnet::to_string(head), gradcheck::max_relative_error(output, used));
  }
  return {worst < 1e-4, "worst=" + fmt("%.3g", worst) + " (" + worst_name + ")"};
}

// 6. Simulator conservation and symmetry.
Outcome physics() {
  diffcore::Rng rng(16);
  const nbody::SimulationParams sp;
  double drift = 0, es_dev = 0, broken = 1e300;
  for (int trial = 0; trial < 10; ++trial) {
    const auto s0 = nbody::random_initial_state(rng, sp);
    const auto es = nbody::FieldSpec::make(nbody::FieldKind::kES);
    const auto traj = nbody::simulate(s0, es, sp.n_steps, sp.dt);
    double scale = 0;
    for (const auto& v : s0.v) scale += geomkit::norm(v);
    const Vec3 p0 = nbody::total_momentum(s0);
    for (std::size_t t = 0; t < traj.n_steps; ++t) {
      drift = std::max(drift, geomkit::norm(nbody::total_momentum(traj.state(t)) - p0) / scale);
    }

    const auto q = geomkit::random_rotation(rng);
    auto rotated = s0;
    for (auto& x : rotated.x) x = geomkit::apply(q, x);
    for (auto& v : rotated.v) v = geomkit::apply(q, v);
    const auto deviation = [&](const nbody::FieldSpec& field) {
      const auto a = nbody::simulate(s0, field, sp.n_steps, sp.dt);
      const auto b = nbody::simulate(rotated, field, sp.n_steps, sp.dt);
      double d = 0;
      for (std::size_t t = 0; t < a.n_steps; ++t)
        for (std::size_t i = 0; i < a.n_bodies; ++i)
          d = std::max(d, geomkit::norm(b.position(t, i) - geomkit::apply(q, a.position(t, i))));
      return d;
    };
    es_dev = std::max(es_dev, deviation(es));
    broken = std::min({broken, deviation(nbody::FieldSpec::make(nbody::FieldKind::kGravityES)),
                       deviation(nbody::FieldSpec::make(nbody::FieldKind::kLorentzES))});
  }
  return {drift < 1e-6 && es_dev < 1e-8 && broken > 1e-2,
          "momentum_drift=" + fmt("%.3g", drift) + " es_rotation_dev=" + fmt("%.3g", es_dev) +
              " field_rotation_dev_min=" + fmt("%.3g", broken)};
}

// 7. Many-body position prediction against the constant-velocity baseline.
Outcome nms() {
  Clock clock;
  const auto dir = kWork / "nms";
  fs::create_directories(dir);
  const nbody::SimulationParams sp;
  const auto es = nbody::FieldSpec::make(nbody::FieldKind::kES);
  nbody::write_dataset(nbody::generate_dataset(800, sp, es, 1001), dir / "train.gcpt");
  nbody::write_dataset(nbody::generate_dataset(100, sp, es, 1002), dir / "val.gcpt");
  nbody::write_dataset(nbody::generate_dataset(100, sp, es, 1003), dir / "test.gcpt");

  cli::RunConfig c;
  c.layers = 4;
  c.omega = 8;
  c.node_vectors = 16;
  c.epochs = 200;
  c.train_data = (dir / "train.gcpt").string();
  c.val_data = (dir / "val.gcpt").string();
  c.out_dir = (dir / "run").string();
  std::ofstream log(dir / "train.log");
  const auto result = cli::train(c, log);
  const auto model = cli::load_model(c, result.checkpoint);
  const auto r = cli::evaluate(model, c.task, cli::load_samples(c, dir / "test.gcpt"), 32);
  const double ratio = r.metrics.at("mse_ratio");
  const double t = clock.seconds();
  return {ratio <= 0.7 && t < 7200,
          "mse=" + fmt("%.4g", r.metrics.at("mse")) + " inertial=" + fmt("%.4g", r.metrics.at("inertial_mse")) +
              " ratio=" + fmt("%.4f", ratio) + " best_epoch=" + std::to_string(result.best_epoch) +
              " time=" + fmt("%.0f", t) + "s"};
}

// 8. Rank correlations against quadratic oracles.
Outcome metrics() {
  diffcore::Rng rng(17);
  double spearman_err = 0, kendall_err = 0;
  std::size_t rank_mismatch = 0, compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(199);
    const auto x = oracle::tied_vector(n, 2 + rng.index(20), rng);
    const auto y = oracle::tied_vector(n, 2 + rng.index(20), rng);
    rank_mismatch += evalkit::average_ranks(x) != oracle::ranks(x);
    const double ref_t = oracle::kendall(x, y);
    if (!std::isfinite(ref_t)) continue;  // a constant vector
    ++compared;
    kendall_err = std::max(kendall_err, std::abs(evalkit::kendall(x, y) - ref_t));
    spearman_err = std::max(spearman_err, std::abs(evalkit::spearman(x, y) - oracle::spearman(x, y)));
  }
  std::vector<double> x(200), y(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = -3.5 * x[i] + 2.0;
  }
  const double affine = std::abs(std::abs(evalkit::pearson(x, y)) - 1.0);
  return {rank_mismatch == 0 && spearman_err < 1e-12 && kendall_err < 1e-12 && affine < 1e-12,
          "compared=" + std::to_string(compared) + " rank_mismatch=" + std::to_string(rank_mismatch) +
              " spearman_err=" + fmt("%.3g", spearman_err) + " kendall_err=" + fmt("%.3g", kendall_err) +
              " affine_pearson_err=" + fmt("%.3g", affine)};
}

// 9. Reproducible training and exact checkpoints.
Outcome determinism() {
  const auto dir = kWork / "determinism";
  fs::create_directories(dir);
  nbody::SimulationParams sp;
  sp.n_steps = 100;
  const auto es = nbody::FieldSpec::make(nbody::FieldKind::kES);
  nbody::write_dataset(nbody::generate_dataset(32, sp, es, 1), dir / "train.gcpt");
  nbody::write_dataset(nbody::generate_dataset(8, sp, es, 2), dir / "val.gcpt");

  cli::RunConfig c;
  c.layers = 2;
  c.omega = 2;
  c.epochs = 3;
  c.batch_size = 8;
  c.seed = 77;
  c.train_data = (dir / "train.gcpt").string();
  c.val_data = (dir / "val.gcpt").string();
  std::string logs[2], checkpoints[2];
  for (int k = 0; k < 2; ++k) {
    c.out_dir = (dir / ("run" + std::to_string(k))).string();
    std::ostringstream log;
    cli::train(c, log);
    logs[k] = slurp(fs::path(c.out_dir) / cli::kMetricsName);
    checkpoints[k] = slurp(fs::path(c.out_dir) / cli::kCheckpointName);
  }

  gcpnet::GcpNet net(c.model_config(), 19);
  const auto path = dir / "roundtrip.gcpk";
  diffcore::save_checkpoint(net.params(), path);
  const auto loaded = cli::load_model(c, path);
  const auto samples = cli::load_samples(c, dir / "val.gcpt");
  bool identical = true;
  for (const auto& s : samples) {
    const auto a = net.predict(s.graph);
    const auto b = loaded.predict(s.graph);
    for (std::size_t i = 0; i < a.node_positions.numel(); ++i)
      identical = identical && a.node_positions.data()[i] == b.node_positions.data()[i];
    for (std::size_t i = 0; i < a.node_features.s.numel(); ++i)
      identical = identical && a.node_features.s.data()[i] == b.node_features.s.data()[i];
  }
  const bool logs_equal = !logs[0].empty() && logs[0] == logs[1];
  const bool ckpt_equal = checkpoints[0] == checkpoints[1];
  return {logs_equal && ckpt_equal && identical, std::string("logs_identical=") + (logs_equal ? "yes" : "no") +
                                                     " checkpoints_identical=" + (ckpt_equal ? "yes" : "no") +
                                                     " reload_identical=" + (identical ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"equivariance", equivariance}, {"chirality", chirality}, {"reflection", reflection},
      {"frames", frames},             {"gradients", gradients}, {"physics", physics},
      {"nms", nms},                   {"metrics", metrics},     {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  fs::create_directories(kWork);
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
