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

#include "puppetcnn/puppeteer.hpp"

#include <cmath>
#include <random>

#include "puppetcnn/errors.hpp"
#include "puppetcnn/ops.hpp"

namespace pcnn {

namespace {

std::vector<double> normal_values(std::size_t n, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

DerivativeNet DerivativeNet::random(std::size_t channels, std::uint64_t seed) {
  if (channels == 0) throw ContractViolation("DerivativeNet needs at least one channel");
  std::mt19937_64 rng(seed);
  DerivativeNet net;
  net.channels = channels;
  const std::size_t c = channels;
  net.depthwise = Tensor::parameter({c, 1, 3, 3}, normal_values(9 * c, std::sqrt(2.0 / 9.0), rng));
  net.pointwise =
      Tensor::parameter({c, c, 1, 1}, normal_values(c * c, std::sqrt(1.0 / double(c)), rng));
  net.pointwise_bias = Tensor::parameter({c}, std::vector<double>(c, 0.0));
  net.norm_scale = Tensor::parameter({c}, std::vector<double>(c, 1.0));
  net.norm_shift = Tensor::parameter({c}, std::vector<double>(c, 0.0));
  return net;
}

DerivativeNet DerivativeNet::zeros(std::size_t channels) {
  const std::size_t c = channels;
  DerivativeNet net;
  net.channels = c;
  net.depthwise = Tensor::parameter({c, 1, 3, 3}, std::vector<double>(9 * c, 0.0));
  net.pointwise = Tensor::parameter({c, c, 1, 1}, std::vector<double>(c * c, 0.0));
  net.pointwise_bias = Tensor::parameter({c}, std::vector<double>(c, 0.0));
  net.norm_scale = Tensor::parameter({c}, std::vector<double>(c, 0.0));
  net.norm_shift = Tensor::parameter({c}, std::vector<double>(c, 0.0));
  return net;
}

std::vector<Tensor*> DerivativeNet::parameters() {
  return {&depthwise, &pointwise, &pointwise_bias, &norm_scale, &norm_shift};
}

std::vector<std::pair<std::string, const Tensor*>> DerivativeNet::named_parameters() const {
  return {{"puppeteer.depthwise", &depthwise},
          {"puppeteer.pointwise", &pointwise},
          {"puppeteer.pointwise_bias", &pointwise_bias},
          {"puppeteer.norm_scale", &norm_scale},
          {"puppeteer.norm_shift", &norm_shift}};
}

std::size_t DerivativeNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

Shape ode_state_shape(const PuppetTemplate& tmpl) {
  return {tmpl.max_out_channels(), tmpl.max_in_channels() + 1, tmpl.kernel * tmpl.kernel};
}

Tensor init_state(const PuppetTemplate& tmpl, double p0) {
  if (!(p0 >= 0.0)) throw ContractViolation("init_state: p0 must be >= 0");
  return ops::exp_fill(ode_state_shape(tmpl), p0);
}

Tensor derivative(const DerivativeNet& net, const Tensor& state) {
  if (state.rank() != 3 || state.shape()[0] != net.channels) {
    throw DimensionError("derivative: state " + shape_str(state.shape()) + " for a net with " +
                         std::to_string(net.channels) + " channels");
  }
  const Shape& s = state.shape();
  Tensor x = ops::reshape(state, {1, s[0], s[1], s[2]});
  x = ops::depthwise_conv2d(x, net.depthwise, 1);
  x = ops::conv2d(x, net.pointwise, net.pointwise_bias, 1, 0);
  x = ops::reshape(x, s);
  x = ops::instance_norm(x, net.norm_scale, net.norm_shift, net.norm_eps);
  return ops::tanh_act(x);
}

Tensor euler_step(const Tensor& state, const DerivativeNet& net, double dl) {
  if (!(dl > 0.0 && dl <= 1.0)) throw ContractViolation("euler_step: dl must lie in (0, 1]");
  return ops::add(state, ops::scale(derivative(net, state), dl));
}

GeneratedLayer extract_layer(const Tensor& state, const LayerSpec& spec) {
  if (state.rank() != 3) throw DimensionError("extract_layer: state must be rank 3");
  const std::size_t out_max = state.shape()[0];
  const std::size_t in_max = state.shape()[1] - 1;
  const std::size_t area = state.shape()[2];
  if (spec.c_out == 0 || spec.c_in == 0 || spec.k == 0 || spec.c_out > out_max ||
      spec.c_in > in_max || spec.k * spec.k > area) {
    throw DimensionError("extract_layer: layer (" + std::to_string(spec.c_out) + ", " +
                         std::to_string(spec.c_in) + ", " + std::to_string(spec.k) +
                         ") exceeds state " + shape_str(state.shape()));
  }
  const Tensor weights = ops::slice(state, 1, 0, in_max);
  Tensor w = ops::adaptive_avg_pool(weights, {spec.c_out, spec.c_in, spec.k * spec.k});
  w = ops::reshape(w, {spec.c_out, spec.c_in, spec.k, spec.k});

  const Tensor bias_row = ops::reshape(ops::slice(state, 1, in_max, in_max + 1), {out_max, area});
  Tensor b = ops::adaptive_avg_pool(bias_row, {spec.c_out, 1});
  b = ops::reshape(b, {spec.c_out});
  return {w, b};
}

GeneratedNetwork generate_network(const DerivativeNet& net, const PuppetTemplate& tmpl,
                                  const AdaptationParams& adaptation) {
  GeneratedNetwork out;
  out.adaptation = adaptation;
  out.plan = plan_layers(tmpl, adaptation.depth);
  Tensor state = init_state(tmpl, adaptation.p0);
  out.layers.reserve(out.plan.specs.size());
  for (const auto& spec : out.plan.specs) {
    state = euler_step(state, net, adaptation.dl);
    out.layers.push_back(extract_layer(state, spec));
  }
  return out;
}

GeneratedNetwork generate_network(const DerivativeNet& net, const PuppetTemplate& tmpl, double h) {
  return generate_network(net, tmpl, adapt(h));
}

}  // namespace pcnn
