#include "gcpn/diffcore/param_store.hpp"

#include <cmath>

#include "gcpn/binary_io.hpp"
#include "gcpn/errors.hpp"

namespace gcpn::diffcore {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

Tensor& ParamStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name " + name);
  Tensor t = Tensor::zeros(shape, true);
  if (init == Init::kFanIn && !shape.empty() && shape[0] > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
    for (auto& v : t.mutable_data()) v = rng.uniform(-bound, bound);
  }
  return params_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::insert(const std::string& name, Tensor value) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name " + name);
  value.set_requires_grad(true);
  return params_.emplace(name, std::move(value)).first->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) {
    t.mutable_grad();
    t.zero_grad();
  }
}

void ParamStore::fill(double value) {
  for (auto& [_, t] : params_)
    for (auto& v : t.mutable_data()) v = value;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.size() != size()) throw ConfigError("parameter count mismatch");
  for (auto& [name, t] : params_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw ConfigError("parameter " + name + " has shape " + shape_str(src.shape()) +
                        ", expected " + shape_str(t.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
}

void adam_step(ParamStore& store, const AdamOptions& options) {
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double bc1 = 1.0 - std::pow(options.beta1, t);
  const double bc2 = 1.0 - std::pow(options.beta2, t);
  for (auto& [name, param] : store) {
    if (!param.has_grad()) continue;
    auto& mom = store.moments[name];
    if (mom.first.size() != param.numel()) {
      mom.first.assign(param.numel(), 0.0);
      mom.second.assign(param.numel(), 0.0);
    }
    auto data = param.mutable_data();
    auto grad = param.mutable_grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      mom.first[i] = options.beta1 * mom.first[i] + (1.0 - options.beta1) * g;
      mom.second[i] = options.beta2 * mom.second[i] + (1.0 - options.beta2) * g * g;
      const double mhat = mom.first[i] / bc1;
      const double vhat = mom.second[i] / bc2;
      data[i] -= options.lr * mhat / (std::sqrt(vhat) + options.eps);
      grad[i] = 0.0;
    }
  }
}

std::vector<char> encode_checkpoint(const ParamStore& store) {
  binary::Writer w;
  w.magic("GCPK");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) w.u64(d);
    w.f64s(t.data().data(), t.numel());
  }
  return w.take();
}

ParamStore decode_checkpoint(const std::vector<char>& bytes) {
  binary::Reader r(bytes, "checkpoint");
  r.expect_magic("GCPK");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = r.u32();
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str(r.u32());
    const auto ndim = r.u32();
    Shape shape(ndim);
    for (auto& d : shape) d = r.u64();
    const auto n = shape_numel(shape);
    if (n > r.remaining() / 8) throw FormatError("checkpoint: truncated data for " + name);
    std::vector<double> data(n);
    r.f64s(data.data(), n);
    store.insert(name, Tensor::from(std::move(shape), std::move(data), true));
  }
  r.expect_end();
  return store;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
  binary::write_file(path, encode_checkpoint(store));
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(binary::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace gcpn::diffcore
