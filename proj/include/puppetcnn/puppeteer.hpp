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

// The puppeteer: a small derivative network G whose Euler integration
// generates every kernel of the puppet CNN.
//
// The ODE state has shape (C_out_max, C_in_max + 1, K_max^2). Rows
// [0, C_in_max) hold weight material; the extra row holds bias material.
// Each puppet layer takes one Euler step, then pools its kernel out of the
// state with adaptive average pooling.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "puppetcnn/complexity.hpp"
#include "puppetcnn/plan.hpp"
#include "puppetcnn/tensor.hpp"

namespace pcnn {

/// Trainable parameters of G: depthwise 3x3 -> pointwise 1x1 (+bias) ->
/// per-channel normalisation with affine -> tanh.
struct DerivativeNet {
  std::size_t channels = 0;  // C_out_max
  Tensor depthwise;          // (C, 1, 3, 3)
  Tensor pointwise;          // (C, C, 1, 1)
  Tensor pointwise_bias;     // (C)
  Tensor norm_scale;         // (C)
  Tensor norm_shift;         // (C)
  double norm_eps = 1e-5;

  /// He-style normal init for the convolutions, unit scale, zero shift/bias.
  static DerivativeNet random(std::size_t channels, std::uint64_t seed);
  static DerivativeNet zeros(std::size_t channels);

  std::vector<Tensor*> parameters();
  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
  std::size_t parameter_count() const;
};

/// C^2 + 12C: pointwise C^2, depthwise 9C, bias C, norm scale/shift 2C.
constexpr std::size_t puppeteer_param_count(std::size_t c) { return c * c + 12 * c; }

Shape ode_state_shape(const PuppetTemplate& tmpl);

struct GeneratedLayer {
  Tensor weight;  // (c_out, c_in, k, k)
  Tensor bias;    // (c_out)
};

/// Every slot equal to p0.
Tensor init_state(const PuppetTemplate& tmpl, double p0);

/// G(state), same shape as the state.
Tensor derivative(const DerivativeNet& net, const Tensor& state);

/// state + G(state) * dl, with 0 < dl <= 1.
Tensor euler_step(const Tensor& state, const DerivativeNet& net, double dl);

GeneratedLayer extract_layer(const Tensor& state, const LayerSpec& spec);

struct GeneratedNetwork {
  std::vector<GeneratedLayer> layers;
  PlannedNetwork plan;
  AdaptationParams adaptation;
};

/// Runs one Euler step followed by one extraction per planned layer.
GeneratedNetwork generate_network(const DerivativeNet& net, const PuppetTemplate& tmpl,
                                  const AdaptationParams& adaptation);

/// Adapts (dl, D, p0) from `h` first.
GeneratedNetwork generate_network(const DerivativeNet& net, const PuppetTemplate& tmpl, double h);

}  // namespace pcnn
