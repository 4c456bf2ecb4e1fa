#include "gcpn/diffcore/ops.hpp"

#include <cmath>
#include <string>

#include "gcpn/errors.hpp"

namespace gcpn::diffcore {

using detail::make_result;
using detail::Node;

namespace {

// Gradient buffer of parent `i`, or nullptr when it does not need one.
std::vector<double>* grad_of(Node& self, std::size_t i) {
  auto& p = self.parents[i];
  if (!p->requires_grad) return nullptr;
  return &p->ensure_grad();
}

const std::vector<double>& data_of(Node& self, std::size_t i) { return self.parents[i]->data; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.ndim() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         " tensor, got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_vectors(const Tensor& v, const char* op) {
  require_rank(v, 3, op);
  if (v.dim(2) != 3) throw DimensionError(std::string(op) + ": trailing extent must be 3");
}

// Row-major C += A·B for A[m,k], B[k,n].
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA += dC·Bᵀ
void gemm_grad_a(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* dcrow = dc + i * n;
    double* darow = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[p] += acc;
    }
  }
}

// dB += Aᵀ·dC
void gemm_grad_b(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* dcrow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* dbrow = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xd[i]);
  return make_result(x.shape(), std::move(out), {x}, [deriv](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const auto& in = data_of(self, 0);
    for (std::size_t i = 0; i < in.size(); ++i) (*g)[i] += self.grad[i] * deriv(in[i], self.data[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) { return linear(a, b); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank(x, 2, "matmul");
  require_rank(w, 2, "matmul");
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  if (w.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_str(x.shape()) + " · " +
                         shape_str(w.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.ndim() != 1 || bias.dim(0) != n)) {
    throw DimensionError("linear: bias shape " + shape_str(bias.shape()) + " for output width " +
                         std::to_string(n));
  }
  std::vector<double> out(m * n, 0.0);
  if (has_bias) {
    auto bd = bias.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = bd[j];
  }
  gemm_acc(x.data().data(), w.data().data(), out.data(), m, k, n);

  std::vector<Tensor> parents{x, w};
  if (has_bias) parents.push_back(bias);
  return make_result({m, n}, std::move(out), std::move(parents), [m, k, n, has_bias](Node& self) {
    const double* dc = self.grad.data();
    if (auto* gx = grad_of(self, 0)) gemm_grad_a(dc, data_of(self, 1).data(), gx->data(), m, k, n);
    if (auto* gw = grad_of(self, 1)) gemm_grad_b(data_of(self, 0).data(), dc, gw->data(), m, k, n);
    if (has_bias) {
      if (auto* gb = grad_of(self, 2)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) (*gb)[j] += dc[i * n + j];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (auto* g = grad_of(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = grad_of(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      const auto& other = data_of(self, 1);
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * other[i];
    }
    if (auto* g = grad_of(self, 1)) {
      const auto& other = data_of(self, 0);
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * other[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * factor;
  });
}

Tensor add_row_vector(const Tensor& x, const Tensor& row) {
  require_rank(x, 2, "add_row_vector");
  require_rank(row, 1, "add_row_vector");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (row.dim(0) != n) throw DimensionError("add_row_vector: width mismatch");
  std::vector<double> out(m * n);
  auto xd = x.data(), rd = row.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xd[i * n + j] + rd[j];
  return make_result({m, n}, std::move(out), {x, row}, [m, n](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = grad_of(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor smooth_gate(const Tensor& x) {
  return unary(
      x, [](double v) { return v * sigmoid_scalar(v); },
      [](double v, double) {
        const double s = sigmoid_scalar(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Tensor& first = parts[0];
  if (first.ndim() < 2) throw DimensionError("concat: inputs need rank >= 2");
  const std::size_t rows = first.dim(0);
  Shape trailing(first.shape().begin() + 2, first.shape().end());
  const std::size_t trail = shape_numel(trailing);

  std::vector<std::size_t> widths;  // flattened per-row width of each part
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    if (p.ndim() != first.ndim() || p.dim(0) != rows ||
        !std::equal(trailing.begin(), trailing.end(), p.shape().begin() + 2)) {
      throw DimensionError("concat: incompatible shapes " + shape_str(first.shape()) + " and " +
                           shape_str(p.shape()));
    }
    total_axis += p.dim(1);
    widths.push_back(p.dim(1) * trail);
  }
  const std::size_t row_width = total_axis * trail;
  std::vector<double> out(rows * row_width);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pd = parts[k].data();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pd.begin() + r * w, w, out.begin() + r * row_width + offset);
    offset += w;
  }
  Shape shape{rows, total_axis};
  shape.insert(shape.end(), trailing.begin(), trailing.end());
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result(std::move(shape), std::move(out), std::move(parents),
                     [widths, rows, row_width](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         const std::size_t w = widths[k];
                         if (auto* g = grad_of(self, k)) {
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < w; ++c)
                               (*g)[r * w + c] += self.grad[r * row_width + offset + c];
                         }
                         offset += w;
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& x, std::span<const Index> rows) {
  if (x.ndim() < 1) throw DimensionError("gather_rows: scalar input");
  const std::size_t n = x.dim(0);
  const std::size_t w = n == 0 ? 0 : x.numel() / n;
  std::vector<double> out(rows.size() * w);
  auto xd = x.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) {
      throw ContractError("gather_rows: index " + std::to_string(rows[r]) + " out of range " +
                          std::to_string(n));
    }
    std::copy_n(xd.begin() + rows[r] * w, w, out.begin() + r * w);
  }
  Shape shape = x.shape();
  shape[0] = rows.size();
  std::vector<Index> idx(rows.begin(), rows.end());
  return make_result(std::move(shape), std::move(out), {x}, [idx = std::move(idx), w](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < w; ++c) (*g)[idx[r] * w + c] += self.grad[r * w + c];
  });
}

namespace {

Tensor segment_reduce(const Tensor& x, std::span<const Index> segment, std::size_t n_segments,
                      bool average) {
  if (x.ndim() < 1 || x.dim(0) != segment.size()) {
    throw DimensionError("segment reduce: " + std::to_string(segment.size()) +
                         " segment ids for tensor " + shape_str(x.shape()));
  }
  const std::size_t rows = x.dim(0);
  const std::size_t w = rows == 0 ? shape_numel(Shape(x.shape().begin() + 1, x.shape().end()))
                                  : x.numel() / rows;
  std::vector<double> weight(n_segments, 0.0);
  for (auto s : segment) {
    if (s >= n_segments) throw ContractError("segment reduce: segment id out of range");
    weight[s] += 1.0;
  }
  for (auto& c : weight) c = average ? (c > 0 ? 1.0 / c : 0.0) : 1.0;

  std::vector<double> out(n_segments * w, 0.0);
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double f = weight[segment[r]];
    for (std::size_t c = 0; c < w; ++c) out[segment[r] * w + c] += f * xd[r * w + c];
  }
  Shape shape = x.shape();
  shape[0] = n_segments;
  std::vector<Index> seg(segment.begin(), segment.end());
  return make_result(std::move(shape), std::move(out), {x},
                     [seg = std::move(seg), weight = std::move(weight), w](Node& self) {
                       if (auto* g = grad_of(self, 0))
                         for (std::size_t r = 0; r < seg.size(); ++r) {
                           const double f = weight[seg[r]];
                           for (std::size_t c = 0; c < w; ++c)
                             (*g)[r * w + c] += f * self.grad[seg[r] * w + c];
                         }
                     });
}

}  // namespace

Tensor segment_sum(const Tensor& x, std::span<const Index> segment, std::size_t n_segments) {
  return segment_reduce(x, segment, n_segments, false);
}

Tensor segment_mean(const Tensor& x, std::span<const Index> segment, std::size_t n_segments) {
  return segment_reduce(x, segment, n_segments, true);
}

Tensor channel_mix(const Tensor& v, const Tensor& w) {
  require_vectors(v, "channel_mix");
  require_rank(w, 2, "channel_mix");
  const std::size_t rows = v.dim(0), cin = v.dim(1), cout = w.dim(1);
  if (w.dim(0) != cin) {
    throw DimensionError("channel_mix: " + std::to_string(cin) + " channels vs weight " +
                         shape_str(w.shape()));
  }
  std::vector<double> out(rows * cout * 3, 0.0);
  auto vd = v.data(), wd = w.data();
  for (std::size_t b = 0; b < rows; ++b) {
    const double* vb = vd.data() + b * cin * 3;
    double* ob = out.data() + b * cout * 3;
    for (std::size_t c = 0; c < cin; ++c) {
      const double x0 = vb[c * 3], x1 = vb[c * 3 + 1], x2 = vb[c * 3 + 2];
      const double* wrow = wd.data() + c * cout;
      for (std::size_t o = 0; o < cout; ++o) {
        const double wv = wrow[o];
        ob[o * 3] += x0 * wv;
        ob[o * 3 + 1] += x1 * wv;
        ob[o * 3 + 2] += x2 * wv;
      }
    }
  }
  return make_result({rows, cout, 3}, std::move(out), {v, w}, [rows, cin, cout](Node& self) {
    const auto& vd = data_of(self, 0);
    const auto& wd = data_of(self, 1);
    auto* gv = grad_of(self, 0);
    auto* gw = grad_of(self, 1);
    for (std::size_t b = 0; b < rows; ++b) {
      const double* gb = self.grad.data() + b * cout * 3;
      const double* vb = vd.data() + b * cin * 3;
      for (std::size_t c = 0; c < cin; ++c) {
        double acc0 = 0, acc1 = 0, acc2 = 0;
        for (std::size_t o = 0; o < cout; ++o) {
          const double wv = wd[c * cout + o];
          if (gw) {
            (*gw)[c * cout + o] +=
                vb[c * 3] * gb[o * 3] + vb[c * 3 + 1] * gb[o * 3 + 1] + vb[c * 3 + 2] * gb[o * 3 + 2];
          }
          acc0 += wv * gb[o * 3];
          acc1 += wv * gb[o * 3 + 1];
          acc2 += wv * gb[o * 3 + 2];
        }
        if (gv) {
          double* g = gv->data() + (b * cin + c) * 3;
          g[0] += acc0;
          g[1] += acc1;
          g[2] += acc2;
        }
      }
    }
  });
}

Tensor vector_norm(const Tensor& v) {
  require_vectors(v, "vector_norm");
  const std::size_t rows = v.dim(0), ch = v.dim(1);
  std::vector<double> out(rows * ch);
  auto vd = v.data();
  for (std::size_t i = 0; i < rows * ch; ++i) {
    const double* p = vd.data() + i * 3;
    out[i] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  return make_result({rows, ch}, std::move(out), {v}, [](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const auto& vd = data_of(self, 0);
    for (std::size_t i = 0; i < self.data.size(); ++i) {
      const double n = self.data[i];
      if (n == 0.0) continue;
      const double f = self.grad[i] / n;
      for (int d = 0; d < 3; ++d) (*g)[i * 3 + d] += f * vd[i * 3 + d];
    }
  });
}

Tensor scalarize(const Tensor& v, const Tensor& frames) {
  require_vectors(v, "scalarize");
  require_vectors(frames, "scalarize");
  const std::size_t rows = v.dim(0), ch = v.dim(1);
  if (frames.dim(0) != rows || frames.dim(1) != 3) {
    throw ContractError("scalarize: " + std::to_string(rows) + " rows but frames " +
                        shape_str(frames.shape()));
  }
  std::vector<double> out(rows * ch * 3);
  auto vd = v.data(), fd = frames.data();
  for (std::size_t b = 0; b < rows; ++b) {
    const double* f = fd.data() + b * 9;
    for (std::size_t c = 0; c < ch; ++c) {
      const double* x = vd.data() + (b * ch + c) * 3;
      for (std::size_t k = 0; k < 3; ++k)
        out[(b * ch + c) * 3 + k] = x[0] * f[k * 3] + x[1] * f[k * 3 + 1] + x[2] * f[k * 3 + 2];
    }
  }
  return make_result({rows, ch * 3}, std::move(out), {v, frames}, [rows, ch](Node& self) {
    const auto& vd = data_of(self, 0);
    const auto& fd = data_of(self, 1);
    auto* gv = grad_of(self, 0);
    auto* gf = grad_of(self, 1);
    for (std::size_t b = 0; b < rows; ++b) {
      for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t k = 0; k < 3; ++k) {
          const double go = self.grad[(b * ch + c) * 3 + k];
          for (std::size_t d = 0; d < 3; ++d) {
            if (gv) (*gv)[(b * ch + c) * 3 + d] += go * fd[b * 9 + k * 3 + d];
            if (gf) (*gf)[b * 9 + k * 3 + d] += go * vd[(b * ch + c) * 3 + d];
          }
        }
      }
    }
  });
}

Tensor scale_channels(const Tensor& v, const Tensor& g) {
  require_vectors(v, "scale_channels");
  require_rank(g, 2, "scale_channels");
  const std::size_t rows = v.dim(0), ch = v.dim(1);
  if (g.dim(0) != rows || g.dim(1) != ch) {
    throw DimensionError("scale_channels: gate " + shape_str(g.shape()) + " for vectors " +
                         shape_str(v.shape()));
  }
  std::vector<double> out(v.numel());
  auto vd = v.data(), gd = g.data();
  for (std::size_t i = 0; i < rows * ch; ++i)
    for (int d = 0; d < 3; ++d) out[i * 3 + d] = vd[i * 3 + d] * gd[i];
  return make_result(v.shape(), std::move(out), {v, g}, [rows, ch](Node& self) {
    const auto& vd = data_of(self, 0);
    const auto& gd = data_of(self, 1);
    auto* gv = grad_of(self, 0);
    auto* gg = grad_of(self, 1);
    for (std::size_t i = 0; i < rows * ch; ++i) {
      for (int d = 0; d < 3; ++d) {
        const double go = self.grad[i * 3 + d];
        if (gv) (*gv)[i * 3 + d] += go * gd[i];
        if (gg) (*gg)[i] += go * vd[i * 3 + d];
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t rows = x.dim(0), n = x.dim(1);
  if (gamma.numel() != n || beta.numel() != n) throw DimensionError("layer_norm: affine width");
  std::vector<double> out(rows * n), xhat(rows * n), inv_std(rows);
  auto xd = x.data(), gd = gamma.data(), bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (xr[j] - mu) * inv_std[r];
      out[r * n + j] = xhat[r * n + j] * gd[j] + bd[j];
    }
  }
  return make_result({rows, n}, std::move(out), {x, gamma, beta},
                     [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& gd = data_of(self, 1);
                       auto* gx = grad_of(self, 0);
                       auto* gg = grad_of(self, 1);
                       auto* gb = grad_of(self, 2);
                       const double inv_n = 1.0 / static_cast<double>(n);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* go = self.grad.data() + r * n;
                         const double* xh = xhat.data() + r * n;
                         double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                         for (std::size_t j = 0; j < n; ++j) {
                           const double dxh = go[j] * gd[j];
                           sum_dxh += dxh;
                           sum_dxh_xh += dxh * xh[j];
                           if (gg) (*gg)[j] += go[j] * xh[j];
                           if (gb) (*gb)[j] += go[j];
                         }
                         if (gx) {
                           for (std::size_t j = 0; j < n; ++j) {
                             const double dxh = go[j] * gd[j];
                             (*gx)[r * n + j] += inv_std[r] * (dxh - inv_n * sum_dxh -
                                                               xh[j] * inv_n * sum_dxh_xh);
                           }
                         }
                       }
                     });
}

Tensor vector_rms_norm(const Tensor& v, double floor) {
  require_vectors(v, "vector_rms_norm");
  const std::size_t rows = v.dim(0), ch = v.dim(1);
  std::vector<double> out(v.numel()), denom(rows);
  std::vector<char> clamped(rows);
  auto vd = v.data();
  for (std::size_t b = 0; b < rows; ++b) {
    double ms = 0.0;
    for (std::size_t i = 0; i < ch * 3; ++i) ms += vd[b * ch * 3 + i] * vd[b * ch * 3 + i];
    ms /= static_cast<double>(ch);
    const double rms = std::sqrt(ms);
    clamped[b] = rms < floor;
    denom[b] = clamped[b] ? floor : rms;
    for (std::size_t i = 0; i < ch * 3; ++i) out[b * ch * 3 + i] = vd[b * ch * 3 + i] / denom[b];
  }
  return make_result(v.shape(), std::move(out), {v},
                     [rows, ch, denom = std::move(denom), clamped = std::move(clamped)](Node& self) {
                       auto* g = grad_of(self, 0);
                       if (!g) return;
                       const std::size_t w = ch * 3;
                       for (std::size_t b = 0; b < rows; ++b) {
                         const double* go = self.grad.data() + b * w;
                         const double* y = self.data.data() + b * w;
                         const double inv = 1.0 / denom[b];
                         // y = v / rms(v):  dv = (go - y (y·go)/ch) / rms
                         double dot = 0.0;
                         if (!clamped[b])
                           for (std::size_t i = 0; i < w; ++i) dot += y[i] * go[i];
                         dot /= static_cast<double>(ch);
                         for (std::size_t i = 0; i < w; ++i) (*g)[b * w + i] += inv * (go[i] - y[i] * dot);
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({}, {s}, {x}, [](Node& self) {
    if (auto* g = grad_of(self, 0))
      for (auto& gi : *g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  auto diff = sub(pred, target);
  return mean(mul(diff, diff));
}

Tensor cross_entropy(const Tensor& logits, std::span<const Index> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != rows) throw DimensionError("cross_entropy: label count mismatch");
  std::vector<double> probs(rows * classes);
  double total = 0.0;
  auto ld = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= classes) throw ContractError("cross_entropy: label out of range");
    const double* lr = ld.data() + r * classes;
    double mx = lr[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, lr[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(lr[c] - mx);
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(lr[c] - mx) / z;
    total += -(lr[labels[r]] - mx - std::log(z));
  }
  std::vector<Index> lab(labels.begin(), labels.end());
  const double inv_rows = 1.0 / static_cast<double>(rows);
  return make_result({}, {total * inv_rows}, {logits},
                     [probs = std::move(probs), lab = std::move(lab), classes, inv_rows](Node& self) {
                       auto* g = grad_of(self, 0);
                       if (!g) return;
                       for (std::size_t r = 0; r < lab.size(); ++r)
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double target = c == lab[r] ? 1.0 : 0.0;
                           (*g)[r * classes + c] +=
                               self.grad[0] * inv_rows * (probs[r * classes + c] - target);
                         }
                     });
}

}  // namespace gcpn::diffcore
