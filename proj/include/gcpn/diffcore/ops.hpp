#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcpn/diffcore/tensor.hpp"

// Differentiable primitives. Every op returns a fresh tensor and never writes
// to its inputs. Vector features use the layout [rows, channels, 3].
namespace gcpn::diffcore {

using Index = std::uint32_t;

Tensor matmul(const Tensor& a, const Tensor& b);
// x·w (+ bias broadcast over rows when `bias` is defined).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor());

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_row_vector(const Tensor& x, const Tensor& row);

Tensor sigmoid(const Tensor& x);
// x·sigmoid(x)
Tensor smooth_gate(const Tensor& x);
Tensor relu(const Tensor& x);

// Concatenates along axis 1. Inputs agree on axis 0 and on all axes after 1.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);

Tensor reshape(const Tensor& x, Shape shape);

Tensor gather_rows(const Tensor& x, std::span<const Index> rows);
// out[s] = sum (or mean) of x rows whose segment id is s. Empty segments are 0.
Tensor segment_sum(const Tensor& x, std::span<const Index> segment, std::size_t n_segments);
Tensor segment_mean(const Tensor& x, std::span<const Index> segment, std::size_t n_segments);

// out[b,o,:] = sum_c v[b,c,:] * w[c,o]
Tensor channel_mix(const Tensor& v, const Tensor& w);
// L2 norm of each 3-vector: [B,r,3] -> [B,r]. Gradient is taken as 0 at 0.
Tensor vector_norm(const Tensor& v);
// out[b, 3c+k] = v[b,c,:] · frame[b,k,:]  with frame rows (a, b, c).
Tensor scalarize(const Tensor& v, const Tensor& frames);
// out[b,c,:] = v[b,c,:] * g[b,c]
Tensor scale_channels(const Tensor& v, const Tensor& g);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// Divides every channel by max(rms of channel norms, floor) per row.
Tensor vector_rms_norm(const Tensor& v, double floor = 1e-8);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Mean softmax cross-entropy of logits [G,C] against class labels.
Tensor cross_entropy(const Tensor& logits, std::span<const Index> labels);

}  // namespace gcpn::diffcore
