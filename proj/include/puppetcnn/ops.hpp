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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "puppetcnn/tensor.hpp"

// Differentiable operators. Shapes must match exactly; the only broadcast is
// the per-channel bias in conv2d.
namespace pcnn::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sum(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Keeps indices [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
/// Joins tensors along axis 0; all other extents must agree.
Tensor concat(std::span<const Tensor> parts);

Tensor relu(const Tensor& x);
Tensor tanh_act(const Tensor& x);
/// Constant tensor with every slot equal to `value`.
Tensor exp_fill(const Shape& shape, double value);

/// x: [N, C_in, H, W], w: [C_out, C_in, K, K], b: [C_out] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t padding);

/// Per-channel spatial convolution. x: [N, C, H, W], w: [C, 1, K, K], stride 1.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, std::size_t padding);

/// Gradient goes to the first maximal slot of each window.
Tensor max_pool2d(const Tensor& x, std::size_t window = 2, std::size_t stride = 2);

/// Output index i of n_out averages input slots
/// [floor(i*n_in/n_out), ceil((i+1)*n_in/n_out)) on every axis jointly.
Tensor adaptive_avg_pool(const Tensor& x, const Shape& out_shape);

/// x: [C, H, W]; per-channel statistics over H*W with learnable affine.
Tensor instance_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps);

struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;

  explicit RunningStats(std::size_t channels = 0) : mean(channels, 0.0), var(channels, 1.0) {}
};

enum class NormMode { train, infer };

/// Affine-free batch normalisation over [N, C, H, W]. Train mode normalises
/// by batch statistics (biased variance) and moves `stats` toward them by
/// `momentum` (0 leaves them untouched). Infer mode uses `stats` as-is.
Tensor batch_norm_2d(const Tensor& x, RunningStats& stats, NormMode mode, double momentum,
                     double eps);

/// Infer-mode normalisation with read-only running statistics.
Tensor batch_norm_2d(const Tensor& x, const RunningStats& stats, double eps);

}  // namespace pcnn::ops
