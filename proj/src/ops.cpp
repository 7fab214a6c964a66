// Copyright 2026 The residiff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "residiff/errors.hpp"
#include "residiff/simd/kernels.hpp"

namespace residiff::ad {
namespace {

using NodePtr = std::shared_ptr<Node>;

void accumulate(Node& target, std::span<const double> g) {
  if (!target.requires_grad) return;
  auto dst = target.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

std::size_t last_dim(const Tensor& x, const char* op) {
  if (x.rank() == 0) throw DimensionError(std::string(op) + ": scalar input has no last axis");
  return x.shape().back();
}

Tensor linear_impl(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (w.rank() != 2 || x.rank() == 0 || x.shape().back() != w.shape()[0]) {
    throw DimensionError("linear: input " + shape_string(x.shape()) +
                         " does not match weight " + shape_string(w.shape()));
  }
  const std::size_t in = w.shape()[0];
  const std::size_t out = w.shape()[1];
  if (b != nullptr && (b->rank() != 1 || b->shape()[0] != out)) {
    throw DimensionError("linear: bias " + shape_string(b->shape()) + " does not match weight " +
                         shape_string(w.shape()));
  }
  const std::size_t rows = x.size() / in;
  Shape shape = x.shape();
  shape.back() = out;
  std::vector<double> y(rows * out, 0.0);
  if (b != nullptr) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(b->values().begin(), out, y.begin() + r * out);
  }
  kernels::gemm_nn(rows, out, in, x.values(), w.values(), y);

  std::vector<NodePtr> parents{x.node(), w.node()};
  if (b != nullptr) parents.push_back(b->node());
  return detail::make_result(std::move(shape), std::move(y), std::move(parents),
                             [rows, in, out](Node& self) {
                               Node& xn = *self.parents[0];
                               Node& wn = *self.parents[1];
                               const auto& g = self.grad;
                               if (xn.requires_grad) {
                                 kernels::gemm_nt(rows, in, out, g, wn.values, xn.ensure_grad());
                               }
                               if (wn.requires_grad) {
                                 kernels::gemm_tn(rows, out, in, xn.values, g, wn.ensure_grad());
                               }
                               if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                                 auto db = self.parents[2]->ensure_grad();
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < out; ++j) db[j] += g[r * out + j];
                               }
                             });
}

Tensor linear_per_channel_impl(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (x.rank() != 3 || w.rank() != 3 || x.shape()[1] != w.shape()[0] ||
      x.shape()[2] != w.shape()[1]) {
    throw DimensionError("linear_per_channel: input " + shape_string(x.shape()) +
                         " does not match weight " + shape_string(w.shape()));
  }
  const std::size_t batch = x.shape()[0];
  const std::size_t channels = x.shape()[1];
  const std::size_t in = x.shape()[2];
  const std::size_t out = w.shape()[2];
  if (b != nullptr && (b->rank() != 2 || b->shape()[0] != channels || b->shape()[1] != out)) {
    throw DimensionError("linear_per_channel: bias " + shape_string(b->shape()) +
                         " does not match weight " + shape_string(w.shape()));
  }
  std::vector<double> y(batch * channels * out, 0.0);
  const auto xv = x.values();
  const auto wv = w.values();
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t d = 0; d < channels; ++d) {
      double* yrow = y.data() + (i * channels + d) * out;
      if (b != nullptr) std::copy_n(b->values().begin() + d * out, out, yrow);
      simd::active().gemm_nn(1, out, in, xv.data() + (i * channels + d) * in,
                             wv.data() + d * in * out, yrow);
    }
  }
  std::vector<NodePtr> parents{x.node(), w.node()};
  if (b != nullptr) parents.push_back(b->node());
  return detail::make_result(
      {batch, channels, out}, std::move(y), std::move(parents),
      [batch, channels, in, out](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        const double* g = self.grad.data();
        const auto& k = simd::active();
        for (std::size_t i = 0; i < batch; ++i) {
          for (std::size_t d = 0; d < channels; ++d) {
            const double* grow = g + (i * channels + d) * out;
            if (xn.requires_grad) {
              k.gemm_nt(1, in, out, grow, wn.values.data() + d * in * out,
                        xn.ensure_grad().data() + (i * channels + d) * in);
            }
            if (wn.requires_grad) {
              k.gemm_tn(1, out, in, xn.values.data() + (i * channels + d) * in, grow,
                        wn.ensure_grad().data() + d * in * out);
            }
            if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
              auto db = self.parents[2]->ensure_grad();
              for (std::size_t j = 0; j < out; ++j) db[d * out + j] += grow[j];
            }
          }
        }
      });
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto xv = x.values();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(xv[i]);
  return detail::make_result(x.shape(), std::move(y), {x.node()}, [deriv](Node& self) {
    Node& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    auto dx = xn.ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * deriv(xn.values[i]);
  });
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Tensor linear(const Tensor& x, const Tensor& w) { return linear_impl(x, w, nullptr); }
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return linear_impl(x, w, &b); }

Tensor linear_per_channel(const Tensor& x, const Tensor& w) {
  return linear_per_channel_impl(x, w, nullptr);
}
Tensor linear_per_channel(const Tensor& x, const Tensor& w, const Tensor& b) {
  return linear_per_channel_impl(x, w, &b);
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] + b.values()[i];
  return detail::make_result(a.shape(), std::move(y), {a.node(), b.node()}, [](Node& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] - b.values()[i];
  return detail::make_result(a.shape(), std::move(y), {a.node(), b.node()}, [](Node& self) {
    accumulate(*self.parents[0], self.grad);
    Node& bn = *self.parents[1];
    if (!bn.requires_grad) return;
    auto db = bn.ensure_grad();
    for (std::size_t i = 0; i < db.size(); ++i) db[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] * b.values()[i];
  return detail::make_result(a.shape(), std::move(y), {a.node(), b.node()}, [](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      auto da = an.ensure_grad();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * bn.values[i];
    }
    if (bn.requires_grad) {
      auto db = bn.ensure_grad();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += self.grad[i] * an.values[i];
    }
  });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary(x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor scale(const Tensor& x, double c) {
  return unary(x, [c](double v) { return v * c; }, [c](double) { return c; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor silu(const Tensor& x) {
  return unary(x, [](double v) { return v * sigmoid(v); },
               [](double v) {
                 const double s = sigmoid(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

Tensor abs(const Tensor& x) {
  return unary(x, [](double v) { return std::abs(v); },
               [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Tensor layer_norm(const Tensor& x, double eps) {
  const std::size_t h = last_dim(x, "layer_norm");
  if (h < 2) {
    throw DimensionError("layer_norm: normalized axis has length " + std::to_string(h) +
                         ", need at least 2");
  }
  const std::size_t rows = x.size() / h;
  const auto xv = x.values();
  std::vector<double> y(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * h;
    double mu = 0.0;
    for (std::size_t i = 0; i < h; ++i) mu += row[i];
    mu /= static_cast<double>(h);
    double var = 0.0;
    for (std::size_t i = 0; i < h; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(h);
    const double rs = 1.0 / std::sqrt(var + eps);
    inv_std[r] = rs;
    for (std::size_t i = 0; i < h; ++i) y[r * h + i] = (row[i] - mu) * rs;
  }
  std::vector<double> normalized = y;
  return detail::make_result(
      x.shape(), std::move(y), {x.node()},
      [h, rows, inv_std = std::move(inv_std), normalized = std::move(normalized)](Node& self) {
        Node& xn = *self.parents[0];
        if (!xn.requires_grad) return;
        auto dx = xn.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = self.grad.data() + r * h;
          const double* yn = normalized.data() + r * h;
          double mean_g = 0.0, mean_gy = 0.0;
          for (std::size_t i = 0; i < h; ++i) {
            mean_g += g[i];
            mean_gy += g[i] * yn[i];
          }
          mean_g /= static_cast<double>(h);
          mean_gy /= static_cast<double>(h);
          for (std::size_t i = 0; i < h; ++i) {
            dx[r * h + i] += inv_std[r] * (g[i] - mean_g - yn[i] * mean_gy);
          }
        }
      });
}

Tensor moving_average(const Tensor& x, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ConfigError("moving_average: window must be odd and positive, got " +
                      std::to_string(window));
  }
  const std::size_t h = last_dim(x, "moving_average");
  const std::size_t rows = x.size() / h;
  const long half = static_cast<long>(window / 2);
  const long hl = static_cast<long>(h);
  const double inv = 1.0 / static_cast<double>(window);
  const auto xv = x.values();
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * h;
    for (long i = 0; i < hl; ++i) {
      double acc = 0.0;
      for (long j = -half; j <= half; ++j) acc += row[std::clamp(i + j, 0L, hl - 1)];
      y[r * h + static_cast<std::size_t>(i)] = acc * inv;
    }
  }
  return detail::make_result(x.shape(), std::move(y), {x.node()},
                             [rows, h, half, hl, inv](Node& self) {
                               Node& xn = *self.parents[0];
                               if (!xn.requires_grad) return;
                               auto dx = xn.ensure_grad();
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const double* g = self.grad.data() + r * h;
                                 double* d = dx.data() + r * h;
                                 for (long i = 0; i < hl; ++i) {
                                   const double gi = g[i] * inv;
                                   for (long j = -half; j <= half; ++j)
                                     d[std::clamp(i + j, 0L, hl - 1)] += gi;
                                 }
                               }
                             });
}

Tensor detach(const Tensor& x) {
  std::vector<double> copy(x.values().begin(), x.values().end());
  return Tensor::from(x.shape(), std::move(copy), false);
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw DimensionError("concat_last: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ outside the last axis");
  }
  const std::size_t na = a.shape().back();
  const std::size_t nb = b.shape().back();
  const std::size_t rows = a.size() / na;
  Shape shape = a.shape();
  shape.back() = na + nb;
  std::vector<double> y(rows * (na + nb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.values().begin() + r * na, na, y.begin() + r * (na + nb));
    std::copy_n(b.values().begin() + r * nb, nb, y.begin() + r * (na + nb) + na);
  }
  return detail::make_result(std::move(shape), std::move(y), {a.node(), b.node()},
                             [rows, na, nb](Node& self) {
                               Node& an = *self.parents[0];
                               Node& bn = *self.parents[1];
                               const std::size_t w = na + nb;
                               if (an.requires_grad) {
                                 auto da = an.ensure_grad();
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t i = 0; i < na; ++i)
                                     da[r * na + i] += self.grad[r * w + i];
                               }
                               if (bn.requires_grad) {
                                 auto db = bn.ensure_grad();
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t i = 0; i < nb; ++i)
                                     db[r * nb + i] += self.grad[r * w + na + i];
                               }
                             });
}

Tensor slice_last(const Tensor& x, std::size_t start, std::size_t length) {
  const std::size_t h = last_dim(x, "slice_last");
  if (start + length > h) {
    throw RangeError("slice_last: [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") outside last axis of " +
                     shape_string(x.shape()));
  }
  const std::size_t rows = x.size() / h;
  Shape shape = x.shape();
  shape.back() = length;
  std::vector<double> y(rows * length);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x.values().begin() + r * h + start, length, y.begin() + r * length);
  return detail::make_result(std::move(shape), std::move(y), {x.node()},
                             [rows, h, start, length](Node& self) {
                               Node& xn = *self.parents[0];
                               if (!xn.requires_grad) return;
                               auto dx = xn.ensure_grad();
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t i = 0; i < length; ++i)
                                   dx[r * h + start + i] += self.grad[r * length + i];
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> y(x.values().begin(), x.values().end());
  return detail::make_result(std::move(shape), std::move(y), {x.node()},
                             [](Node& self) { accumulate(*self.parents[0], self.grad); });
}

Tensor repeat_axis(const Tensor& x, int axis, std::size_t count) {
  const int r = static_cast<int>(x.rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r || x.shape()[static_cast<std::size_t>(a)] != 1) {
    throw DimensionError("repeat_axis: axis " + std::to_string(axis) + " of " +
                         shape_string(x.shape()) + " is not of length 1");
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.shape()[static_cast<std::size_t>(i)];
  for (int i = a + 1; i < r; ++i) inner *= x.shape()[static_cast<std::size_t>(i)];
  Shape shape = x.shape();
  shape[static_cast<std::size_t>(a)] = count;
  std::vector<double> y(outer * count * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < count; ++c)
      std::copy_n(x.values().begin() + o * inner, inner, y.begin() + (o * count + c) * inner);
  return detail::make_result(std::move(shape), std::move(y), {x.node()},
                             [outer, count, inner](Node& self) {
                               Node& xn = *self.parents[0];
                               if (!xn.requires_grad) return;
                               auto dx = xn.ensure_grad();
                               for (std::size_t o = 0; o < outer; ++o)
                                 for (std::size_t c = 0; c < count; ++c)
                                   for (std::size_t i = 0; i < inner; ++i)
                                     dx[o * inner + i] += self.grad[(o * count + c) * inner + i];
                             });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return detail::make_result({}, {acc}, {x.node()}, [](Node& self) {
    Node& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    const double g = self.grad[0];
    for (double& d : xn.ensure_grad()) d += g;
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean_abs_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_abs_error");
  const double n = static_cast<double>(a.size());
  const double v = kernels::sum_abs_diff(a.values(), b.values()) / n;
  return detail::make_result({}, {v}, {a.node(), b.node()}, [n](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    const double g = self.grad[0] / n;
    for (std::size_t i = 0; i < an.values.size(); ++i) {
      const double d = an.values[i] - bn.values[i];
      const double s = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
      if (an.requires_grad) an.ensure_grad()[i] += s;
      if (bn.requires_grad) bn.ensure_grad()[i] -= s;
    }
  });
}

Tensor mean_squared_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_squared_error");
  const double n = static_cast<double>(a.size());
  const double v = kernels::sum_sq_diff(a.values(), b.values()) / n;
  return detail::make_result({}, {v}, {a.node(), b.node()}, [n](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    const double g = 2.0 * self.grad[0] / n;
    for (std::size_t i = 0; i < an.values.size(); ++i) {
      const double s = g * (an.values[i] - bn.values[i]);
      if (an.requires_grad) an.ensure_grad()[i] += s;
      if (bn.requires_grad) bn.ensure_grad()[i] -= s;
    }
  });
}

Tensor sinusoidal_embedding(double k, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("sinusoidal_embedding: dimension must be even and positive, got " +
                      std::to_string(dim));
  }
  std::vector<double> pe(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double denom =
        std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    pe[2 * i] = std::sin(k / denom);
    pe[2 * i + 1] = std::cos(k / denom);
  }
  return Tensor::from({dim}, std::move(pe));
}

Tensor sinusoidal_embedding(std::span<const std::size_t> steps, std::size_t dim) {
  std::vector<double> out;
  out.reserve(steps.size() * dim);
  for (std::size_t k : steps) {
    const Tensor row = sinusoidal_embedding(static_cast<double>(k), dim);
    out.insert(out.end(), row.values().begin(), row.values().end());
  }
  return Tensor::from({steps.size(), dim}, std::move(out));
}

}  // namespace residiff::ad
