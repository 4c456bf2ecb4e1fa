#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcpn/cli/commands.hpp"
#include "gcpn/cli/run_config.hpp"
#include "gcpn/cli/trainer.hpp"
#include "gcpn/errors.hpp"

using namespace gcpn;
using namespace gcpn::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gcpn_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small nms datasets in `dir`: train.gcpt, val.gcpt.
void make_nms_data(const fs::path& dir, std::size_t traj, std::size_t steps) {
  std::ostringstream sink;
  GenerateOptions g;
  g.traj = traj;
  g.steps = steps;
  g.seed = 1;
  g.out = (dir / "train.gcpt").string();
  cmd_generate(g, sink);
  g.seed = 2;
  g.traj = std::max<std::size_t>(2, traj / 4);
  g.out = (dir / "val.gcpt").string();
  cmd_generate(g, sink);
}

RunConfig tiny_nms(const fs::path& dir) {
  RunConfig c;
  c.layers = 1;
  c.omega = 1;
  c.node_scalars = 8;
  c.node_vectors = 4;
  c.edge_scalars = 8;
  c.edge_vectors = 2;
  c.batch_size = 4;
  c.epochs = 3;
  c.lr = 1e-3;
  c.train_data = (dir / "train.gcpt").string();
  c.val_data = (dir / "val.gcpt").string();
  c.out_dir = (dir / "run").string();
  return c;
}

}  // namespace

TEST_CASE("run config round-trips through text") {
  RunConfig c;
  c.task = Task::kChiral;
  c.layers = 3;
  c.lr = 0.1 + 0.2;  // not exactly representable as a short decimal
  c.dropout = 0.0;
  c.ablate_frames = true;
  c.update_positions = false;
  c.seed = 12345678901234ULL;
  c.train_data = "a b.gcpt";
  c.aggregation = gcpconv::Aggregation::kSum;
  const auto back = parse_run_config(serialize_run_config(c));
  CHECK(back == c);
  CHECK(parse_run_config(serialize_run_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("run config parser rejects bad input") {
  CHECK_THROWS_AS(parse_run_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("layers = 2\nlayers = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("layers = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("task = protein\n"), ConfigError);
  CHECK_THROWS_WITH(parse_run_config("# c\n\nlayers = 2\nbogus = 1\n"), Catch::Matchers::ContainsSubstring("line 4"));
  const auto c = parse_run_config("  # comment\nlayers = 2   # trailing\n");
  CHECK(c.layers == 2);
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.task = Task::kChiral;
  CHECK_NOTHROW(c.validate());
  CHECK_FALSE(c.resolved_update_positions());
  c.update_positions = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  RunConfig n;
  CHECK(n.resolved_update_positions());
  n.update_positions = false;
  CHECK_THROWS_AS(n.validate(), ConfigError);

  RunConfig b;
  b.batch_size = 0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  b = RunConfig{};
  b.min_epochs = b.epochs + 1;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}

TEST_CASE("seed environment override") {
  RunConfig c;
  c.seed = 5;
  ::setenv("GCPN_SEED", "42", 1);
  apply_env_overrides(c);
  CHECK(c.seed == 42);
  ::setenv("GCPN_SEED", "4x2", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
  ::unsetenv("GCPN_SEED");
  apply_env_overrides(c);
  CHECK(c.seed == 42);
}

TEST_CASE("generate is deterministic in the seed") {
  const auto dir = scratch("generate");
  std::ostringstream sink;
  GenerateOptions g;
  g.traj = 3;
  g.steps = 20;
  g.seed = 9;
  g.out = (dir / "a.gcpt").string();
  CHECK(cmd_generate(g, sink) == 0);
  g.out = (dir / "b.gcpt").string();
  cmd_generate(g, sink);
  g.seed = 10;
  g.out = (dir / "c.gcpt").string();
  cmd_generate(g, sink);
  CHECK(slurp(dir / "a.gcpt") == slurp(dir / "b.gcpt"));
  CHECK(slurp(dir / "a.gcpt") != slurp(dir / "c.gcpt"));

  g.field = "magnetic";
  CHECK_THROWS_AS(cmd_generate(g, sink), ConfigError);
}

TEST_CASE("zero epochs keeps the initial checkpoint") {
  const auto dir = scratch("zero");
  make_nms_data(dir, 4, 20);
  auto c = tiny_nms(dir);
  c.epochs = 0;
  std::ostringstream log;
  const auto r = train(c, log);
  CHECK(r.epochs.empty());
  CHECK(r.best_epoch == 0);
  CHECK(fs::exists(fs::path(c.out_dir) / kCheckpointName));
  CHECK(slurp(fs::path(c.out_dir) / kMetricsName).empty());
  CHECK(load_run_config(fs::path(c.out_dir) / kConfigName) == c);
}

TEST_CASE("training is bit-reproducible and checkpoints reload exactly") {
  const auto dir = scratch("repro");
  make_nms_data(dir, 8, 30);
  auto c = tiny_nms(dir);
  c.dropout = 0.2;  // exercises the seeded dropout stream
  std::ostringstream log1, log2;
  train(c, log1);
  const auto first = slurp(fs::path(c.out_dir) / kMetricsName);
  const auto ckpt1 = slurp(fs::path(c.out_dir) / kCheckpointName);
  train(c, log2);
  CHECK(log1.str() == log2.str());
  CHECK(first == slurp(fs::path(c.out_dir) / kMetricsName));
  CHECK(ckpt1 == slurp(fs::path(c.out_dir) / kCheckpointName));
  CHECK(first.find("epoch=3 ") != std::string::npos);

  c.seed = 1;
  std::ostringstream log3;
  train(c, log3);
  CHECK(log3.str() != log1.str());

  const auto model = load_model(c, fs::path(c.out_dir) / kCheckpointName);
  const auto samples = load_samples(c, c.val_data);
  const auto a = model.predict(samples[0].graph);
  const auto b = load_model(c, fs::path(c.out_dir) / kCheckpointName).predict(samples[0].graph);
  REQUIRE(a.node_positions.numel() == b.node_positions.numel());
  for (std::size_t i = 0; i < a.node_positions.numel(); ++i) CHECK(a.node_positions.data()[i] == b.node_positions.data()[i]);
}

TEST_CASE("dataset kind must match the task") {
  const auto dir = scratch("kind");
  make_nms_data(dir, 4, 20);
  auto c = tiny_nms(dir);
  c.task = Task::kChiral;
  CHECK_THROWS_AS(load_samples(c, c.train_data), FormatError);
  CHECK_THROWS_AS(load_samples(c, (dir / "missing.gcpt").string()), IoError);
}

TEST_CASE("nms model overfits a small training set") {
  const auto dir = scratch("overfit");
  make_nms_data(dir, 8, 40);
  auto c = tiny_nms(dir);
  c.layers = 2;
  c.omega = 2;
  c.dropout = 0.0;
  c.dense_dropout = 0.0;
  c.epochs = 150;
  c.batch_size = 8;
  c.lr = 3e-3;
  c.val_data = c.train_data;
  const auto samples = load_samples(c, c.train_data);
  std::ostringstream log;

  auto initial = c;
  initial.epochs = 0;
  train(initial, log);
  const double before = evaluate(load_model(c, fs::path(c.out_dir) / kCheckpointName), Task::kNms, samples, 8)
                            .metrics.at("mse");

  train(c, log);
  const auto model = load_model(c, fs::path(c.out_dir) / kCheckpointName);
  const auto rep = evaluate(model, Task::kNms, samples, 8);
  INFO(rep.to_text());
  CHECK(rep.metrics.at("mse") < 1e-3);
  CHECK(rep.metrics.at("mse") < before / 10);
}

TEST_CASE("small chiral run separates the two hands") {
  const auto dir = scratch("chiral");
  std::ostringstream sink;
  GenerateChiralOptions g;
  g.n = 500;
  g.seed = 1;
  g.out = (dir / "train.gcpt").string();
  CHECK(cmd_generate_chiral(g, sink) == 0);
  g.n = 100;
  g.seed = 2;
  g.out = (dir / "val.gcpt").string();
  cmd_generate_chiral(g, sink);

  std::ofstream(dir / "run.cfg") << "task = chiral\nlayers = 2\nomega = 2\nnode_scalars = 16\nnode_vectors = 4\n"
                                 << "edge_scalars = 16\nedge_vectors = 2\nepochs = 20\nlr = 1e-3\nbatch_size = 16\n"
                                 << "train_data = " << (dir / "train.gcpt").string() << "\n"
                                 << "val_data = " << (dir / "val.gcpt").string() << "\n"
                                 << "test_data = " << (dir / "val.gcpt").string() << "\n"
                                 << "out_dir = " << (dir / "run").string() << "\n";
  std::ostringstream out;
  CHECK(cmd_train((dir / "run.cfg").string(), out) == 0);
  const auto report = slurp(dir / "run" / "test_report.txt");
  INFO(report);
  const auto pos = report.find("accuracy=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(report.substr(pos + 9)) > 0.9);

  EvalOptions e;
  e.config = (dir / "run.cfg").string();
  e.json = (dir / "eval.json").string();
  std::ostringstream eval_out;
  CHECK(cmd_eval(e, eval_out) == 0);
  CHECK(eval_out.str() == report);
  CHECK(fs::exists(dir / "eval.json"));
}

TEST_CASE("check passes on a fresh model") {
  CheckOptions o;
  o.trials = 5;
  o.frame_edges = 1000;
  std::ostringstream out;
  CHECK(cmd_check(o, out) == 0);
  CHECK(out.str().find("status=ok") != std::string::npos);
}
