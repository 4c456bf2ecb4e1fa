#pragma once

#include <vector>

#include "support/gradcheck.hpp"

namespace gradcheck {

struct PrimitiveCase {
  const char* name;
  Fn f;
  std::vector<Tensor> in;
};

// One small random instance of every differentiable primitive.
inline std::vector<PrimitiveCase> primitive_cases() {
  using namespace gcpn::diffcore;
  Rng rng(3);
  const auto a = random_tensor({4, 3}, rng);
  const auto b = random_tensor({3, 5}, rng);
  const auto c = random_tensor({4, 3}, rng);
  const auto row = random_tensor({3}, rng);
  const auto v = random_tensor({4, 3, 3}, rng);
  const auto w = random_tensor({3, 2}, rng);
  const auto g = random_tensor({4, 3}, rng);
  const auto frames = random_tensor({4, 3, 3}, rng);
  const auto gamma = random_tensor({3}, rng);
  const auto beta = random_tensor({3}, rng);
  const std::vector<Index> rows{2, 0, 2, 1, 3};
  const std::vector<Index> seg{1, 1, 0, 2};

  using V = std::vector<Tensor>;
  return {
      {"matmul", [](const V& t) { return matmul(t[0], t[1]); }, {a, b}},
      {"linear", [](const V& t) { return linear(t[0], t[1], t[2]); }, {a, b, random_tensor({5}, rng)}},
      {"add", [](const V& t) { return add(t[0], t[1]); }, {a, c}},
      {"sub", [](const V& t) { return sub(t[0], t[1]); }, {a, c}},
      {"mul", [](const V& t) { return mul(t[0], t[1]); }, {a, c}},
      {"scale", [](const V& t) { return scale(t[0], -1.5); }, {a}},
      {"add_row_vector", [](const V& t) { return add_row_vector(t[0], t[1]); }, {a, row}},
      {"sigmoid", [](const V& t) { return sigmoid(t[0]); }, {a}},
      {"smooth_gate", [](const V& t) { return smooth_gate(t[0]); }, {a}},
      {"relu", [](const V& t) { return relu(t[0]); }, {a}},
      {"concat", [](const V& t) { return concat({t[0], t[1]}); }, {a, c}},
      {"reshape", [](const V& t) { return reshape(t[0], {3, 4}); }, {a}},
      {"gather_rows", [rows](const V& t) { return gather_rows(t[0], rows); }, {a}},
      {"segment_sum", [seg](const V& t) { return segment_sum(t[0], seg, 3); }, {a}},
      {"segment_mean", [seg](const V& t) { return segment_mean(t[0], seg, 4); }, {a}},
      {"channel_mix", [](const V& t) { return channel_mix(t[0], t[1]); }, {v, w}},
      {"vector_norm", [](const V& t) { return vector_norm(t[0]); }, {v}},
      {"scalarize", [](const V& t) { return scalarize(t[0], t[1]); }, {v, frames}},
      {"scale_channels", [](const V& t) { return scale_channels(t[0], t[1]); }, {v, g}},
      {"layer_norm", [](const V& t) { return layer_norm(t[0], t[1], t[2]); }, {a, gamma, beta}},
      {"vector_rms_norm", [](const V& t) { return vector_rms_norm(t[0]); }, {v}},
      {"sum", [](const V& t) { return sum(t[0]); }, {a}},
      {"mean", [](const V& t) { return mean(t[0]); }, {a}},
      {"mse_loss", [](const V& t) { return mse_loss(t[0], t[1]); }, {a, c}},
      {"cross_entropy", [](const V& t) { return cross_entropy(t[0], std::vector<Index>{0, 2, 1, 0}); }, {a}},
  };
}

}  // namespace gradcheck
