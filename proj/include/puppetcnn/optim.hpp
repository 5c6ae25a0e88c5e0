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

namespace pcnn {

/// -log softmax(logits)[label] with max subtraction. logits: (K).
Tensor cross_entropy(const Tensor& logits, std::size_t label);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

/// Bias-corrected Adam. Each params[i] is replaced by a fresh trainable leaf
/// holding the updated values; moments are created on the first call.
void adam_step(std::span<Tensor* const> params, std::span<const std::vector<double>> grads,
               AdamState& state, const AdamConfig& config);

}  // namespace pcnn
