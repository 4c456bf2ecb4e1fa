#include "gcpn/cli/commands.hpp"

#include <fstream>

#include "gcpn/chiral/chiral.hpp"
#include "gcpn/cli/trainer.hpp"
#include "gcpn/errors.hpp"
#include "gcpn/evalkit/equivariance.hpp"
#include "gcpn/nbody/nbody.hpp"

namespace gcpn::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

RunConfig load_config_with_env(const std::string& path) {
  auto cfg = load_run_config(path);
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

int cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  if (opt.out.empty()) throw ConfigError("generate: --out is required");
  nbody::SimulationParams params;
  params.n_bodies = opt.bodies;
  params.n_steps = opt.steps;
  params.dt = opt.dt;
  const auto field = nbody::FieldSpec::make(nbody::parse_field(opt.field));
  const auto ds = nbody::generate_dataset(opt.traj, params, field, opt.seed);
  nbody::write_dataset(ds, opt.out);
  out << "wrote " << opt.traj << " trajectories (" << opt.field << ", " << opt.bodies << " bodies, " << opt.steps
      << " steps) to " << opt.out << "\n";
  return 0;
}

int cmd_generate_chiral(const GenerateChiralOptions& opt, std::ostream& out) {
  if (opt.out.empty()) throw ConfigError("generate-chiral: --out is required");
  chiral::write_chiral(chiral::generate_chiral(opt.n, opt.seed), opt.out);
  out << "wrote " << opt.n << " chiral samples to " << opt.out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, std::ostream& out) {
  const auto cfg = load_config_with_env(config_path);
  const auto result = train(cfg, out);
  out << "best_epoch=" << result.best_epoch << " checkpoint=" << result.checkpoint.string() << "\n";
  if (!cfg.test_data.empty() && cfg.epochs > 0) {
    const auto model = load_model(cfg, result.checkpoint);
    const auto report = evaluate(model, cfg.task, load_samples(cfg, cfg.test_data), cfg.batch_size);
    const std::filesystem::path dir(cfg.out_dir);
    write_text(dir / "test_report.txt", report.to_text());
    write_text(dir / "test_report.json", report.to_json());
    out << report.to_text();
  }
  return 0;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const auto cfg = load_config_with_env(opt.config);
  const std::string checkpoint =
      opt.checkpoint.empty() ? (std::filesystem::path(cfg.out_dir) / kCheckpointName).string() : opt.checkpoint;
  const std::string data = opt.data.empty() ? cfg.test_data : opt.data;
  if (data.empty()) throw ConfigError("eval: no dataset (pass --data or set test_data)");
  const auto model = load_model(cfg, checkpoint);
  const auto report = evaluate(model, cfg.task, load_samples(cfg, data), cfg.batch_size);
  out << report.to_text();
  if (!opt.json.empty()) write_text(opt.json, report.to_json());
  return 0;
}

int cmd_check(const CheckOptions& opt, std::ostream& out) {
  RunConfig cfg;
  if (!opt.config.empty()) cfg = load_config_with_env(opt.config);
  else apply_env_overrides(cfg);
  gcpnet::GcpNet model(cfg.model_config(), cfg.seed);
  if (!opt.checkpoint.empty()) model.params().copy_values_from(diffcore::load_checkpoint(opt.checkpoint));
  evalkit::CheckOptions check;
  check.trials = opt.trials;
  check.frame_edges = opt.frame_edges;
  check.seed = opt.seed;
  const auto report = evalkit::check_model(model, check);
  out << report.to_text();
  if (!opt.json.empty()) write_text(opt.json, report.to_json());
  const bool ok = report.worst_equivariance() <= opt.tol;
  out << (ok ? "status=ok" : "status=violation") << " tol=" << opt.tol << "\n";
  return ok ? 0 : 1;
}

}  // namespace gcpn::cli
