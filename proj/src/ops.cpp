// Copyright 2026 The puppetcnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "puppetcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "puppetcnn/errors.hpp"

namespace pcnn::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

// Output columns j with 0 <= j*stride + offset < extent, clipped to [0, out).
std::pair<std::size_t, std::size_t> valid_range(std::ptrdiff_t offset, std::size_t stride,
                                                std::size_t extent, std::size_t out) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + s - 1) / s;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(extent) - 1 - offset;
  if (last < 0) return {0, 0};
  std::ptrdiff_t hi = last / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out));
  if (lo >= hi) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::from_op(a.shape(), std::move(out), {a, b},
                         [](auto, std::span<const double> g, auto grads) {
                           for (auto* buf : grads) {
                             if (!buf) continue;
                             for (std::size_t i = 0; i < g.size(); ++i) (*buf)[i] += g[i];
                           }
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::from_op(a.shape(), std::move(out), {a, b},
                         [a, b](auto, std::span<const double> g, auto grads) {
                           const auto x = a.data();
                           const auto y = b.data();
                           if (auto* ga = grads[0]) {
                             for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i];
                           }
                           if (auto* gb = grads[1]) {
                             for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * x[i];
                           }
                         });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= s;
  return Tensor::from_op(a.shape(), std::move(out), {a},
                         [s](auto, std::span<const double> g, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += s * g[i];
                         });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::from_op({1}, {total}, {a}, [](auto, std::span<const double> g, auto grads) {
    for (auto& v : *grads[0]) v += g[0];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::from_op(std::move(shape), std::move(out), {a},
                         [](auto, std::span<const double> g, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
                         });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& in = a.shape();
  if (axis >= in.size() || begin >= end || end > in[axis]) {
    throw DimensionError("slice: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + shape_str(in));
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  const std::size_t len = end - begin;
  Shape out_shape = in;
  out_shape[axis] = len;

  std::vector<double> out(outer * len * inner);
  const auto x = a.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const auto src = x.begin() + static_cast<std::ptrdiff_t>((o * in[axis] + begin) * inner);
    std::copy(src, src + static_cast<std::ptrdiff_t>(len * inner), out.begin() + o * len * inner);
  }
  const std::size_t extent = in[axis];
  return Tensor::from_op(std::move(out_shape), std::move(out), {a},
                         [=](auto, std::span<const double> g, auto grads) {
                           auto& gx = *grads[0];
                           for (std::size_t o = 0; o < outer; ++o) {
                             const std::size_t dst = (o * extent + begin) * inner;
                             for (std::size_t i = 0; i < len * inner; ++i) {
                               gx[dst + i] += g[o * len * inner + i];
                             }
                           }
                         });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Shape out_shape = parts[0].shape();
  out_shape[0] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != out_shape.size() || !std::equal(s.begin() + 1, s.end(), out_shape.begin() + 1)) {
      throw DimensionError("concat: " + shape_str(s) + " does not match " +
                           shape_str(parts[0].shape()));
    }
    out_shape[0] += s[0];
  }
  std::vector<double> out;
  out.reserve(numel(out_shape));
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return Tensor::from_op(std::move(out_shape), std::move(out),
                         std::vector<Tensor>(parts.begin(), parts.end()),
                         [offsets](auto, std::span<const double> g, auto grads) {
                           for (std::size_t j = 0; j < grads.size(); ++j) {
                             auto* buf = grads[j];
                             if (!buf) continue;
                             for (std::size_t i = 0; i < buf->size(); ++i) {
                               (*buf)[i] += g[offsets[j] + i];
                             }
                           }
                         });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [](std::span<const double> y, std::span<const double> g, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (y[i] > 0.0) (*grads[0])[i] += g[i];
                           }
                         });
}

Tensor tanh_act(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = std::tanh(v);
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [](std::span<const double> y, std::span<const double> g, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             (*grads[0])[i] += g[i] * (1.0 - y[i] * y[i]);
                           }
                         });
}

Tensor exp_fill(const Shape& shape, double value) { return Tensor::full(shape, value); }

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t padding) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const std::size_t O = w.shape()[0], K = w.shape()[2];
  if (w.shape()[1] != C) {
    throw DimensionError("conv2d: input has " + std::to_string(C) + " channels, weight expects " +
                         std::to_string(w.shape()[1]));
  }
  if (w.shape()[3] != K) throw DimensionError("conv2d: kernel must be square");
  if (stride == 0) throw ContractViolation("conv2d: stride must be >= 1");
  if (K > H + 2 * padding || K > W + 2 * padding) {
    throw DimensionError("conv2d: kernel " + std::to_string(K) + " larger than padded input " +
                         shape_str(x.shape()));
  }
  const bool has_bias = b.defined();
  if (has_bias && b.shape() != Shape{O}) {
    throw DimensionError("conv2d: bias shape " + shape_str(b.shape()) + " for " +
                         std::to_string(O) + " output channels");
  }
  const std::size_t OH = (H + 2 * padding - K) / stride + 1;
  const std::size_t OW = (W + 2 * padding - K) / stride + 1;
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  std::vector<double> out(N * O * OH * OW, 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      double* dst = out.data() + (n * O + o) * OH * OW;
      if (has_bias) std::fill(dst, dst + OH * OW, b[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* src = xd.data() + (n * C + c) * H * W;
        for (std::size_t u = 0; u < K; ++u) {
          const auto [i0, i1] = valid_range(static_cast<std::ptrdiff_t>(u) - pad, stride, H, OH);
          for (std::size_t v = 0; v < K; ++v) {
            const double wv = wd[((o * C + c) * K + u) * K + v];
            const auto [j0, j1] =
                valid_range(static_cast<std::ptrdiff_t>(v) - pad, stride, W, OW);
            for (std::size_t i = i0; i < i1; ++i) {
              const std::size_t ih = i * stride + u - padding;
              const double* row = src + ih * W;
              double* drow = dst + i * OW;
              for (std::size_t j = j0; j < j1; ++j) drow[j] += wv * row[j * stride + v - padding];
            }
          }
        }
      }
    }
  }

  std::vector<Tensor> inputs{x, w};
  if (has_bias) inputs.push_back(b);
  return Tensor::from_op(
      {N, O, OH, OW}, std::move(out), std::move(inputs),
      [=](auto, std::span<const double> g, auto grads) {
        const auto xd = x.data();
        const auto wd = w.data();
        auto* gx = grads[0];
        auto* gw = grads[1];
        auto* gb = has_bias ? grads[2] : nullptr;
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t o = 0; o < O; ++o) {
            const double* gout = g.data() + (n * O + o) * OH * OW;
            if (gb) {
              double acc = 0.0;
              for (std::size_t i = 0; i < OH * OW; ++i) acc += gout[i];
              (*gb)[o] += acc;
            }
            for (std::size_t c = 0; c < C; ++c) {
              const double* src = xd.data() + (n * C + c) * H * W;
              double* gsrc = gx ? gx->data() + (n * C + c) * H * W : nullptr;
              for (std::size_t u = 0; u < K; ++u) {
                const auto [i0, i1] =
                    valid_range(static_cast<std::ptrdiff_t>(u) - pad, stride, H, OH);
                for (std::size_t v = 0; v < K; ++v) {
                  const std::size_t widx = ((o * C + c) * K + u) * K + v;
                  const double wv = wd[widx];
                  const auto [j0, j1] =
                      valid_range(static_cast<std::ptrdiff_t>(v) - pad, stride, W, OW);
                  double acc = 0.0;
                  for (std::size_t i = i0; i < i1; ++i) {
                    const std::size_t off = (i * stride + u - padding) * W + v - padding;
                    const double* grow = gout + i * OW;
                    for (std::size_t j = j0; j < j1; ++j) {
                      acc += grow[j] * src[off + j * stride];
                      if (gsrc) gsrc[off + j * stride] += grow[j] * wv;
                    }
                  }
                  if (gw) (*gw)[widx] += acc;
                }
              }
            }
          }
        }
      });
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, std::size_t padding) {
  require_rank(x, 4, "depthwise_conv2d input");
  require_rank(w, 4, "depthwise_conv2d weight");
  const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const std::size_t K = w.shape()[2];
  if (w.shape()[0] != C || w.shape()[1] != 1 || w.shape()[3] != K) {
    throw DimensionError("depthwise_conv2d: weight " + shape_str(w.shape()) + " for input " +
                         shape_str(x.shape()));
  }
  if (K > H + 2 * padding || K > W + 2 * padding) {
    throw DimensionError("depthwise_conv2d: kernel larger than padded input");
  }
  const std::size_t OH = H + 2 * padding - K + 1;
  const std::size_t OW = W + 2 * padding - K + 1;
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  std::vector<double> out(N * C * OH * OW, 0.0);
  const auto xd = x.data();
  const auto wd = w.data();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = xd.data() + (n * C + c) * H * W;
      double* dst = out.data() + (n * C + c) * OH * OW;
      for (std::size_t u = 0; u < K; ++u) {
        const auto [i0, i1] = valid_range(static_cast<std::ptrdiff_t>(u) - pad, 1, H, OH);
        for (std::size_t v = 0; v < K; ++v) {
          const double wv = wd[(c * K + u) * K + v];
          const auto [j0, j1] = valid_range(static_cast<std::ptrdiff_t>(v) - pad, 1, W, OW);
          for (std::size_t i = i0; i < i1; ++i) {
            const double* row = src + (i + u - padding) * W + v - padding;
            double* drow = dst + i * OW;
            for (std::size_t j = j0; j < j1; ++j) drow[j] += wv * row[j];
          }
        }
      }
    }
  }

  return Tensor::from_op(
      {N, C, OH, OW}, std::move(out), {x, w},
      [=](auto, std::span<const double> g, auto grads) {
        const auto xd = x.data();
        const auto wd = w.data();
        auto* gx = grads[0];
        auto* gw = grads[1];
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t c = 0; c < C; ++c) {
            const double* src = xd.data() + (n * C + c) * H * W;
            double* gsrc = gx ? gx->data() + (n * C + c) * H * W : nullptr;
            const double* gout = g.data() + (n * C + c) * OH * OW;
            for (std::size_t u = 0; u < K; ++u) {
              const auto [i0, i1] = valid_range(static_cast<std::ptrdiff_t>(u) - pad, 1, H, OH);
              for (std::size_t v = 0; v < K; ++v) {
                const std::size_t widx = (c * K + u) * K + v;
                const double wv = wd[widx];
                const auto [j0, j1] = valid_range(static_cast<std::ptrdiff_t>(v) - pad, 1, W, OW);
                double acc = 0.0;
                for (std::size_t i = i0; i < i1; ++i) {
                  const std::size_t off = (i + u - padding) * W + v - padding;
                  const double* grow = gout + i * OW;
                  for (std::size_t j = j0; j < j1; ++j) {
                    acc += grow[j] * src[off + j];
                    if (gsrc) gsrc[off + j] += grow[j] * wv;
                  }
                }
                if (gw) (*gw)[widx] += acc;
              }
            }
          }
        }
      });
}

Tensor max_pool2d(const Tensor& x, std::size_t window, std::size_t stride) {
  require_rank(x, 4, "max_pool2d");
  const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (window == 0 || stride == 0) throw ContractViolation("max_pool2d: window and stride >= 1");
  if (H < window || W < window) {
    throw DimensionError("max_pool2d: input " + shape_str(x.shape()) + " smaller than window");
  }
  const std::size_t OH = (H - window) / stride + 1;
  const std::size_t OW = (W - window) / stride + 1;
  std::vector<double> out(N * C * OH * OW);
  std::vector<std::size_t> argmax(out.size());
  const auto xd = x.data();
  for (std::size_t p = 0; p < N * C; ++p) {
    for (std::size_t i = 0; i < OH; ++i) {
      for (std::size_t j = 0; j < OW; ++j) {
        std::size_t best = p * H * W + (i * stride) * W + j * stride;
        for (std::size_t u = 0; u < window; ++u) {
          for (std::size_t v = 0; v < window; ++v) {
            const std::size_t idx = p * H * W + (i * stride + u) * W + j * stride + v;
            if (xd[idx] > xd[best]) best = idx;
          }
        }
        const std::size_t o = (p * OH + i) * OW + j;
        out[o] = xd[best];
        argmax[o] = best;
      }
    }
  }
  return Tensor::from_op({N, C, OH, OW}, std::move(out), {x},
                         [argmax = std::move(argmax)](auto, std::span<const double> g, auto grads) {
                           auto& gx = *grads[0];
                           for (std::size_t o = 0; o < g.size(); ++o) gx[argmax[o]] += g[o];
                         });
}

namespace {

struct PoolPlan {
  Shape in_shape;
  Shape out_shape;
  std::vector<std::size_t> in_strides;
  // Per axis, per output index: [begin, end) in input coordinates.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ranges;

  // Calls fn(out_flat, in_flat, inv_count) for every (output, input-in-region) pair.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const std::size_t rank = in_shape.size();
    std::vector<std::size_t> oi(rank, 0);
    const std::size_t total = numel(out_shape);
    for (std::size_t out = 0; out < total; ++out) {
      std::size_t count = 1;
      for (std::size_t a = 0; a < rank; ++a) {
        count *= ranges[a][oi[a]].second - ranges[a][oi[a]].first;
      }
      const double inv = 1.0 / static_cast<double>(count);
      walk(0, 0, oi, [&](std::size_t in) { fn(out, in, inv); });
      for (std::size_t a = rank; a-- > 0;) {
        if (++oi[a] < out_shape[a]) break;
        oi[a] = 0;
      }
    }
  }

  template <typename Fn>
  void walk(std::size_t axis, std::size_t base, const std::vector<std::size_t>& oi,
            Fn&& fn) const {
    const auto [b, e] = ranges[axis][oi[axis]];
    if (axis + 1 == in_shape.size()) {
      for (std::size_t k = b; k < e; ++k) fn(base + k);
      return;
    }
    for (std::size_t k = b; k < e; ++k) walk(axis + 1, base + k * in_strides[axis], oi, fn);
  }
};

}  // namespace

Tensor adaptive_avg_pool(const Tensor& x, const Shape& out_shape) {
  const Shape& in = x.shape();
  if (out_shape.size() != in.size()) {
    throw DimensionError("adaptive_avg_pool: rank mismatch " + shape_str(in) + " -> " +
                         shape_str(out_shape));
  }
  PoolPlan plan;
  plan.in_shape = in;
  plan.out_shape = out_shape;
  plan.in_strides.assign(in.size(), 1);
  for (std::size_t a = in.size(); a-- > 1;) plan.in_strides[a - 1] = plan.in_strides[a] * in[a];
  plan.ranges.resize(in.size());
  for (std::size_t a = 0; a < in.size(); ++a) {
    const std::size_t n_in = in[a], n_out = out_shape[a];
    if (n_out == 0 || n_out > n_in) {
      throw DimensionError("adaptive_avg_pool: cannot pool " + shape_str(in) + " to " +
                           shape_str(out_shape));
    }
    for (std::size_t i = 0; i < n_out; ++i) {
      plan.ranges[a].emplace_back(i * n_in / n_out, ((i + 1) * n_in + n_out - 1) / n_out);
    }
  }

  std::vector<double> out(numel(out_shape), 0.0);
  const auto xd = x.data();
  plan.for_each([&](std::size_t o, std::size_t i, double inv) { out[o] += xd[i] * inv; });
  return Tensor::from_op(out_shape, std::move(out), {x},
                         [plan = std::move(plan)](auto, std::span<const double> g, auto grads) {
                           auto& gx = *grads[0];
                           plan.for_each(
                               [&](std::size_t o, std::size_t i, double inv) { gx[i] += g[o] * inv; });
                         });
}

Tensor instance_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
  require_rank(x, 3, "instance_norm");
  if (eps <= 0.0) throw ContractViolation("instance_norm: eps must be > 0");
  const std::size_t C = x.shape()[0];
  const std::size_t M = x.shape()[1] * x.shape()[2];
  if (scale.shape() != Shape{C} || shift.shape() != Shape{C}) {
    throw DimensionError("instance_norm: scale/shift must have shape (" + std::to_string(C) + ")");
  }
  const auto xd = x.data();
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(C);
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = xd.data() + c * M;
    double mean = 0.0;
    for (std::size_t i = 0; i < M; ++i) mean += src[i];
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (std::size_t i = 0; i < M; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(M);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < M; ++i) {
      xhat[c * M + i] = (src[i] - mean) * inv_std[c];
      out[c * M + i] = scale[c] * xhat[c * M + i] + shift[c];
    }
  }
  return Tensor::from_op(
      x.shape(), std::move(out), {x, scale, shift},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](auto, std::span<const double> g,
                                                                auto grads) {
        for (std::size_t c = 0; c < C; ++c) {
          const double* gc = g.data() + c * M;
          const double* xh = xhat.data() + c * M;
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t i = 0; i < M; ++i) {
            sum_g += gc[i];
            sum_gx += gc[i] * xh[i];
          }
          if (grads[1]) (*grads[1])[c] += sum_gx;
          if (grads[2]) (*grads[2])[c] += sum_g;
          if (grads[0]) {
            const double s = scale[c];
            const double mean_g = sum_g / static_cast<double>(M);
            const double mean_gx = sum_gx / static_cast<double>(M);
            double* gx = grads[0]->data() + c * M;
            for (std::size_t i = 0; i < M; ++i) {
              gx[i] += s * inv_std[c] * (gc[i] - mean_g - xh[i] * mean_gx);
            }
          }
        }
      });
}

namespace {

void check_bn(const Tensor& x, const RunningStats& stats, double eps) {
  require_rank(x, 4, "batch_norm_2d");
  if (eps <= 0.0) throw ContractViolation("batch_norm_2d: eps must be > 0");
  const std::size_t C = x.shape()[1];
  if (stats.mean.size() != C || stats.var.size() != C) {
    throw DimensionError("batch_norm_2d: running stats sized for " +
                         std::to_string(stats.mean.size()) + " channels, input has " +
                         std::to_string(C));
  }
}

}  // namespace

Tensor batch_norm_2d(const Tensor& x, const RunningStats& stats, double eps) {
  check_bn(x, stats, eps);
  const std::size_t N = x.shape()[0], C = x.shape()[1];
  const std::size_t M = x.shape()[2] * x.shape()[3];
  const auto xd = x.data();
  std::vector<double> out(x.size());
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    inv_std[c] = 1.0 / std::sqrt(stats.var[c] + eps);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < M; ++i) {
        const std::size_t k = (n * C + c) * M + i;
        out[k] = (xd[k] - stats.mean[c]) * inv_std[c];
      }
    }
  }
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [=, inv_std = std::move(inv_std)](auto, std::span<const double> g,
                                                           auto grads) {
                           auto& gx = *grads[0];
                           for (std::size_t n = 0; n < N; ++n) {
                             for (std::size_t c = 0; c < C; ++c) {
                               for (std::size_t i = 0; i < M; ++i) {
                                 const std::size_t k = (n * C + c) * M + i;
                                 gx[k] += g[k] * inv_std[c];
                               }
                             }
                           }
                         });
}

Tensor batch_norm_2d(const Tensor& x, RunningStats& stats, NormMode mode, double momentum,
                     double eps) {
  if (mode == NormMode::infer) return batch_norm_2d(x, std::as_const(stats), eps);
  check_bn(x, stats, eps);
  const std::size_t N = x.shape()[0], C = x.shape()[1];
  const std::size_t M = x.shape()[2] * x.shape()[3];
  const auto xd = x.data();
  std::vector<double> out(x.size());

  const std::size_t count = N * M;
  if (count < 2) {
    throw ContractViolation("batch_norm_2d: train mode needs at least 2 values per channel, got " +
                            shape_str(x.shape()));
  }
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < M; ++i) mean += xd[(n * C + c) * M + i];
    }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < M; ++i) {
        const double d = xd[(n * C + c) * M + i] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(count);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < M; ++i) {
        const std::size_t k = (n * C + c) * M + i;
        xhat[k] = (xd[k] - mean) * inv_std[c];
      }
    }
    if (momentum != 0.0) {
      stats.mean[c] = (1.0 - momentum) * stats.mean[c] + momentum * mean;
      stats.var[c] = (1.0 - momentum) * stats.var[c] + momentum * var;
    }
  }
  out = xhat;
  return Tensor::from_op(
      x.shape(), std::move(out), {x},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](auto, std::span<const double> g,
                                                                auto grads) {
        auto& gx = *grads[0];
        const auto cnt = static_cast<double>(count);
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < M; ++i) {
              const std::size_t k = (n * C + c) * M + i;
              sum_g += g[k];
              sum_gx += g[k] * xhat[k];
            }
          }
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < M; ++i) {
              const std::size_t k = (n * C + c) * M + i;
              gx[k] += inv_std[c] * (g[k] - sum_g / cnt - xhat[k] * sum_gx / cnt);
            }
          }
        }
      });
}

}  // namespace pcnn::ops
