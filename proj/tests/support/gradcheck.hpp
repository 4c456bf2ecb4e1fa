#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gcpn/diffcore/ops.hpp"
#include "gcpn/diffcore/rng.hpp"

namespace gradcheck {

using gcpn::diffcore::Tensor;
using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

inline Tensor random_tensor(gcpn::diffcore::Shape shape, gcpn::diffcore::Rng& rng, double scale = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Reduces f to a scalar with fixed random weights so every output entry
// contributes to the gradient.
inline Tensor weighted(const Tensor& y, std::uint64_t seed) {
  gcpn::diffcore::Rng rng(seed);
  std::vector<double> w(y.numel());
  for (auto& x : w) x = rng.normal();
  return gcpn::diffcore::sum(gcpn::diffcore::mul(y, Tensor::from(y.shape(), std::move(w))));
}

// Worst relative error ||g_ad - g_fd|| / max(||g_ad||, ||g_fd||) over the
// inputs that require grad, using central differences with step h.
inline double max_relative_error(const Fn& f, std::vector<Tensor> inputs, double h = 1e-5,
                                 std::uint64_t seed = 17) {
  for (auto& t : inputs) t.zero_grad();
  gcpn::diffcore::backward(weighted(f(inputs), seed));
  double worst = 0.0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double x0 = t.data()[i];
      double fp, fm;
      {
        gcpn::diffcore::NoGradGuard g;
        t.mutable_data()[i] = x0 + h;
        fp = weighted(f(inputs), seed).item();
        t.mutable_data()[i] = x0 - h;
        fm = weighted(f(inputs), seed).item();
        t.mutable_data()[i] = x0;
      }
      const double numeric = (fp - fm) / (2 * h);
      diff2 += (numeric - analytic[i]) * (numeric - analytic[i]);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    const double denom = std::max(std::sqrt(std::max(a2, n2)), 1e-12);
    worst = std::max(worst, std::sqrt(diff2) / denom);
  }
  return worst;
}

}  // namespace gradcheck
