#include "gcpn/cli/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <algorithm>
#include <limits>
#include <numeric>

#include "gcpn/chiral/chiral.hpp"
#include "gcpn/diffcore/param_store.hpp"
#include "gcpn/errors.hpp"
#include "gcpn/nbody/nbody.hpp"

namespace gcpn::cli {

std::vector<Sample> load_samples(const RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("dataset not found: " + path.string());
  std::vector<Sample> out;
  if (cfg.task == Task::kChiral) {
    for (const auto& s : chiral::read_chiral(path)) {
      Sample x;
      x.graph = chiral::featurize_chiral(s);
      x.label = s.label;
      out.push_back(std::move(x));
    }
    return out;
  }
  const auto ds = nbody::read_dataset(path);
  if (ds.field.kind == nbody::FieldKind::kChiral) {
    throw FormatError(path.string() + ": chiral dataset given to the nms task");
  }
  const std::size_t horizon = cfg.horizon == 0 ? ds.n_steps - 1 : cfg.horizon;
  for (const auto& traj : ds.trajectories) {
    auto f = nbody::featurize_nms(traj, 0, horizon, ds.dt);
    out.push_back({std::move(f.graph), std::move(f.target), std::move(f.inertial), 0});
  }
  return out;
}

Batch make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> ids, gcpnet::Head head) {
  std::vector<const geomkit::GeoGraph*> graphs;
  Batch b;
  for (auto id : ids) {
    const auto& s = samples[id];
    graphs.push_back(&s.graph);
    if (head == gcpnet::Head::kNodePositions) {
      b.targets.positions.insert(b.targets.positions.end(), s.target.begin(), s.target.end());
    } else {
      b.targets.labels.push_back(s.label);
    }
  }
  b.graph = geomkit::batch(graphs);
  return b;
}

std::string format_epoch(const EpochLog& e) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "epoch=%zu train_loss=%.17g val_loss=%.17g", e.epoch, e.train_loss, e.val_loss);
  return buf;
}

namespace {

std::vector<std::vector<std::size_t>> chunks(std::size_t n, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < n; k += size) {
    std::vector<std::size_t> ids(std::min(size, n - k));
    std::iota(ids.begin(), ids.end(), k);
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace

double evaluate_loss(const gcpnet::GcpNet& model, const std::vector<Sample>& samples, std::size_t batch_size) {
  if (samples.empty()) throw ContractError("evaluate_loss: empty sample set");
  const auto head = model.config().head;
  double total = 0;
  double weight = 0;
  for (const auto& ids : chunks(samples.size(), batch_size)) {
    const auto b = make_batch(samples, ids, head);
    const auto out = model.predict(b.graph);
    const double w = head == gcpnet::Head::kNodePositions ? static_cast<double>(b.targets.positions.size())
                                                          : static_cast<double>(ids.size());
    total += gcpnet::loss(out, head, b.targets).item() * w;
    weight += w;
  }
  return total / weight;
}

gcpnet::GcpNet load_model(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
  gcpnet::GcpNet model(cfg.model_config(), cfg.seed);
  model.params().copy_values_from(diffcore::load_checkpoint(checkpoint));
  return model;
}

TrainResult train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.train_data.empty() || cfg.val_data.empty()) throw ConfigError("train_data and val_data must be set");
  const auto train_set = load_samples(cfg, cfg.train_data);
  const auto val_set = load_samples(cfg, cfg.val_data);
  return train(cfg, train_set, val_set, log);
}

TrainResult train(const RunConfig& cfg, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  std::ostream& log) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) throw ContractError("train: empty train or validation set");
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  save_run_config(cfg, dir / kConfigName);

  gcpnet::GcpNet model(cfg.model_config(), cfg.seed);
  const auto head = model.config().head;
  diffcore::AdamOptions adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
  diffcore::Rng rng(cfg.seed ^ 0x5DEECE66DULL);

  TrainResult result;
  result.checkpoint = dir / kCheckpointName;
  diffcore::save_checkpoint(model.params(), result.checkpoint);
  result.best_val_loss = std::numeric_limits<double>::infinity();

  std::ofstream metrics(dir / kMetricsName, std::ios::trunc);
  if (!metrics) throw IoError("cannot write " + (dir / kMetricsName).string());

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t k = 0; k < order.size(); k += cfg.batch_size) {
      const std::span<const std::size_t> ids(order.data() + k, std::min(cfg.batch_size, order.size() - k));
      const auto b = make_batch(train_set, ids, head);
      const auto out = model.forward(b.graph, gcpconv::ForwardContext{true, &rng});
      const auto loss = gcpnet::loss(out, head, b.targets);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(steps));
      }
      diffcore::backward(loss);
      diffcore::adam_step(model.params(), adam);
      loss_sum += value;
      ++steps;
    }
    EpochLog e{epoch, loss_sum / static_cast<double>(steps), evaluate_loss(model, val_set, cfg.batch_size)};
    if (!std::isfinite(e.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.epochs.push_back(e);
    const auto line = format_epoch(e);
    metrics << line << "\n" << std::flush;
    log << line << "\n" << std::flush;
    if (epoch >= cfg.min_epochs && e.val_loss < result.best_val_loss) {
      result.best_val_loss = e.val_loss;
      result.best_epoch = epoch;
      diffcore::save_checkpoint(model.params(), result.checkpoint);
    }
  }
  if (cfg.epochs == 0) result.best_val_loss = evaluate_loss(model, val_set, cfg.batch_size);
  return result;
}

evalkit::MetricReport evaluate(const gcpnet::GcpNet& model, Task task, const std::vector<Sample>& samples,
                               std::size_t batch_size) {
  if (samples.empty()) throw ContractError("evaluate: empty sample set");
  evalkit::MetricReport report;
  report.n_samples = samples.size();
  if (task == Task::kNms) {
    std::vector<double> pred, target, inertial;
    for (const auto& ids : chunks(samples.size(), batch_size)) {
      const auto b = make_batch(samples, ids, gcpnet::Head::kNodePositions);
      const auto out = model.predict(b.graph);
      const auto p = out.node_positions.data();
      pred.insert(pred.end(), p.begin(), p.end());
      for (auto id : ids) {
        target.insert(target.end(), samples[id].target.begin(), samples[id].target.end());
        inertial.insert(inertial.end(), samples[id].inertial.begin(), samples[id].inertial.end());
      }
    }
    auto& m = report.metrics;
    m["mse"] = evalkit::mse(pred, target);
    m["rmse"] = std::sqrt(m["mse"]);
    m["inertial_mse"] = evalkit::mse(inertial, target);
    m["inertial_rmse"] = std::sqrt(m["inertial_mse"]);
    m["mse_ratio"] = m["mse"] / m["inertial_mse"];
    const auto c = evalkit::per_axis_correlations(pred, target, &m);
    m["pearson"] = c.pearson;
    m["spearman"] = c.spearman;
    m["kendall"] = c.kendall;
    return report;
  }
  std::vector<std::uint32_t> pred, target;
  double ce = 0;
  for (const auto& ids : chunks(samples.size(), batch_size)) {
    const auto b = make_batch(samples, ids, gcpnet::Head::kGraphClass);
    const auto out = model.predict(b.graph);
    ce += gcpnet::loss(out, gcpnet::Head::kGraphClass, b.targets).item() * static_cast<double>(ids.size());
    const auto logits = out.class_logits.data();
    const std::size_t c = out.class_logits.dim(1);
    for (std::size_t g = 0; g < ids.size(); ++g) {
      const auto row = logits.subspan(g * c, c);
      pred.push_back(static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin()));
      target.push_back(samples[ids[g]].label);
    }
  }
  report.metrics["accuracy"] = evalkit::accuracy(pred, target);
  report.metrics["cross_entropy"] = ce / static_cast<double>(samples.size());
  return report;
}

}  // namespace gcpn::cli
