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

#include "puppetcnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "puppetcnn/errors.hpp"

namespace pcnn {

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) throw DimensionError("cross_entropy expects logits of shape (K)");
  const std::size_t K = logits.size();
  if (label >= K) {
    throw ContractViolation("label " + std::to_string(label) + " out of range for " +
                            std::to_string(K) + " classes");
  }
  const auto z = logits.data();
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  const double loss = std::log(denom) + zmax - z[label];

  std::vector<double> softmax(K);
  for (std::size_t i = 0; i < K; ++i) softmax[i] = std::exp(z[i] - zmax) / denom;
  return Tensor::from_op({1}, {loss}, {logits},
                         [softmax = std::move(softmax), label](auto, std::span<const double> g,
                                                               auto grads) {
                           auto& gz = *grads[0];
                           for (std::size_t i = 0; i < softmax.size(); ++i) {
                             gz[i] += g[0] * (softmax[i] - (i == label ? 1.0 : 0.0));
                           }
                         });
}

void adam_step(std::span<Tensor* const> params, std::span<const std::vector<double>> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state/parameter mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i]->size() || state.m[i].size() != params[i]->size()) {
      throw DimensionError("adam_step: gradient " + std::to_string(i) + " does not match " +
                           shape_str(params[i]->shape()));
    }
  }

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    const auto old = params[i]->data();
    std::vector<double> updated(old.begin(), old.end());
    for (std::size_t k = 0; k < updated.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      updated[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.eps);
    }
    *params[i] = Tensor::parameter(params[i]->shape(), std::move(updated));
  }
}

}  // namespace pcnn
