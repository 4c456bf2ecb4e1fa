#include <exception>
#include <iostream>

#include "CLI11.hpp"

#include "gcpn/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace gcpn::cli;
  CLI::App app{"Geometry-complete equivariant graph network: data, training and checks"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "simulate charged many-body trajectories");
  g->add_option("--field", gen.field, "es | g_es | l_es")->check(CLI::IsMember({"es", "g_es", "l_es"}));
  g->add_option("--bodies", gen.bodies, "bodies per system");
  g->add_option("--traj", gen.traj, "number of trajectories");
  g->add_option("--steps", gen.steps, "recorded steps per trajectory (including the initial state)");
  g->add_option("--dt", gen.dt, "integration step");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out)->required();

  GenerateChiralOptions chi;
  auto* gc = app.add_subcommand("generate-chiral", "synthesise left/right-handed point sets");
  gc->add_option("--n", chi.n, "number of samples (even)");
  gc->add_option("--seed", chi.seed);
  gc->add_option("--out", chi.out)->required();

  std::string train_config;
  auto* tr = app.add_subcommand("train", "train a model from a run config");
  tr->add_option("config", train_config, "run config file")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "score a checkpoint on a dataset");
  e->add_option("config", ev.config, "run config file")->required();
  e->add_option("--checkpoint", ev.checkpoint);
  e->add_option("--data", ev.data);
  e->add_option("--json", ev.json, "also write a JSON report here");

  CheckOptions ck;
  auto* c = app.add_subcommand("check", "equivariance and frame audit of a model");
  c->add_option("--config", ck.config, "run config (default: fresh nms model)");
  c->add_option("--checkpoint", ck.checkpoint, "weights (default: fresh initialisation)");
  c->add_option("--tol", ck.tol);
  c->add_option("--trials", ck.trials);
  c->add_option("--frame-edges", ck.frame_edges);
  c->add_option("--seed", ck.seed);
  c->add_option("--json", ck.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*g) return cmd_generate(gen, std::cout);
    if (*gc) return cmd_generate_chiral(chi, std::cout);
    if (*tr) return cmd_train(train_config, std::cout);
    if (*e) return cmd_eval(ev, std::cout);
    if (*c) return cmd_check(ck, std::cout);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
