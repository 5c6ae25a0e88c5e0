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

#include "puppetcnn/puppet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "puppetcnn/errors.hpp"

namespace pcnn {

BnState::BnState(const PuppetTemplate& tmpl, std::size_t max_depth) : max_depth_(max_depth) {
  for (auto c : tmpl.channels) slots_.emplace_back(max_depth, ops::RunningStats(c));
}

ops::RunningStats& BnState::at(std::size_t stage, std::size_t layer) {
  if (stage >= slots_.size() || layer >= max_depth_) {
    throw DimensionError("batch-norm slot (" + std::to_string(stage) + ", " +
                         std::to_string(layer) + ") out of range; max depth is " +
                         std::to_string(max_depth_));
  }
  return slots_[stage][layer];
}

const ops::RunningStats& BnState::at(std::size_t stage, std::size_t layer) const {
  return const_cast<BnState*>(this)->at(stage, layer);
}

namespace {

struct NormContext {
  const BnState* read = nullptr;  // infer
  BnState* train = nullptr;       // train
  NormOptions opts;

  // Normalizes ys[i] for every i in `active` with the slot's batch norm. In
  // train phase with batch scope the statistics span all active lanes.
  void apply(std::vector<Tensor>& ys, const std::vector<std::size_t>& active, std::size_t stage,
             std::size_t slot) const {
    if (!train) {
      for (auto i : active) ys[i] = ops::batch_norm_2d(ys[i], read->at(stage, slot), opts.eps);
      return;
    }
    auto& stats = train->at(stage, slot);
    if (opts.scope == NormScope::sample || active.size() == 1) {
      for (auto i : active) {
        ys[i] = ops::batch_norm_2d(ys[i], stats, ops::NormMode::train, opts.momentum, opts.eps);
      }
      return;
    }
    std::vector<Tensor> parts;
    for (auto i : active) parts.push_back(ys[i]);
    const Tensor joined = ops::batch_norm_2d(ops::concat(parts), stats, ops::NormMode::train,
                                             opts.momentum, opts.eps);
    for (std::size_t j = 0; j < active.size(); ++j) ys[active[j]] = ops::slice(joined, 0, j, j + 1);
  }
};

void check_layer(const GeneratedLayer& layer, const LayerSpec& spec, std::size_t index) {
  const Shape want{spec.c_out, spec.c_in, spec.k, spec.k};
  if (layer.weight.shape() != want || layer.bias.shape() != Shape{spec.c_out}) {
    throw DimensionError("layer " + std::to_string(index) + " has weight " +
                         shape_str(layer.weight.shape()) + ", plan expects " + shape_str(want));
  }
}

Tensor conv_same(const Tensor& x, const GeneratedLayer& layer, ForwardStats* stats) {
  const std::size_t k = layer.weight.shape()[2];
  Tensor y = ops::conv2d(x, layer.weight, layer.bias, 1, (k - 1) / 2);
  if (stats) {
    const auto& w = layer.weight.shape();
    stats->multadds += w[0] * y.shape()[2] * y.shape()[3] * w[1] * w[2] * w[3];
  }
  return y;
}

Tensor maybe_pool(const Tensor& x) {
  if (x.shape()[2] >= 2 && x.shape()[3] >= 2) return ops::max_pool2d(x, 2, 2);
  return x;
}

Tensor head(const Tensor& x, const GeneratedLayer& layer, std::size_t num_classes,
            ForwardStats* stats) {
  const std::size_t c = x.shape()[1];
  Tensor pooled = ops::adaptive_avg_pool(x, {1, c, 1, 1});
  Tensor out = ops::conv2d(pooled, layer.weight, layer.bias, 1, 0);
  if (stats) stats->multadds += num_classes * c;
  return ops::reshape(out, {num_classes});
}

void check_input(const Tensor& x, const PuppetTemplate& tmpl) {
  if (x.rank() != 4 || x.shape()[0] != 1 || x.shape()[1] != tmpl.in_channels) {
    throw DimensionError("puppet input must be [1, " + std::to_string(tmpl.in_channels) +
                         ", H, W], got " + shape_str(x.shape()));
  }
}

// One sample travelling through the network alongside the others.
struct Lane {
  Tensor h;
  std::span<const GeneratedLayer> layers;
  const PlannedNetwork* plan = nullptr;
  ForwardStats* stats = nullptr;
};

std::vector<std::size_t> all_lanes(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::vector<Tensor> finish(std::vector<Lane>& lanes, const PuppetTemplate& tmpl) {
  std::vector<Tensor> out;
  for (auto& lane : lanes) out.push_back(head(lane.h, lane.layers.back(), tmpl.num_classes, lane.stats));
  return out;
}

std::vector<Tensor> run_layers(std::vector<Lane> lanes, const PuppetTemplate& tmpl,
                               const NormContext& norm) {
  const std::size_t stages = tmpl.channels.size();
  for (const auto& lane : lanes) {
    check_input(lane.h, tmpl);
    const auto& plan = *lane.plan;
    if (lane.layers.size() != plan.specs.size() ||
        plan.specs.size() != plan.depth_per_stage * stages + 1) {
      throw DimensionError("forward: " + std::to_string(lane.layers.size()) + " layers for " +
                           std::to_string(plan.specs.size()) + " planned specs");
    }
    for (std::size_t i = 0; i < plan.specs.size(); ++i) check_layer(lane.layers[i], plan.specs[i], i);
  }
  std::vector<Tensor> ys(lanes.size());
  for (std::size_t s = 0; s < stages; ++s) {
    std::size_t depth = 0;
    for (const auto& lane : lanes) depth = std::max(depth, lane.plan->depth_per_stage);
    for (std::size_t l = 0; l < depth; ++l) {
      std::vector<std::size_t> active;
      for (std::size_t i = 0; i < lanes.size(); ++i) {
        auto& lane = lanes[i];
        const std::size_t d = lane.plan->depth_per_stage;
        if (l >= d) continue;
        const std::size_t idx = s * d + l;
        const auto& spec = lane.plan->specs[idx];
        ys[i] = conv_same(lane.h, lane.layers[idx], lane.stats);
        if (tmpl.topology == Topology::residual && spec.c_in == spec.c_out) {
          ys[i] = ops::add(lane.h, ys[i]);
        }
        active.push_back(i);
      }
      norm.apply(ys, active, s, l);
      for (auto i : active) {
        auto& lane = lanes[i];
        lane.h = ops::relu(ys[i]);
        if (lane.stats) ++lane.stats->conv_layers;
        if (lane.plan->pools_after(s * lane.plan->depth_per_stage + l)) lane.h = maybe_pool(lane.h);
      }
    }
  }
  return finish(lanes, tmpl);
}

// Stored layers: [transition_0, shared_0, transition_1, shared_1, ..., head].
std::vector<Tensor> run_shared(std::vector<Lane> lanes, const PuppetTemplate& tmpl,
                               const NormContext& norm) {
  const auto specs = shared_layer_specs(tmpl);
  for (const auto& lane : lanes) {
    check_input(lane.h, tmpl);
    if (lane.layers.size() != specs.size()) {
      throw DimensionError("shared forward: expected " + std::to_string(specs.size()) + " layers");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) check_layer(lane.layers[i], specs[i], i);
  }
  std::vector<Tensor> ys(lanes.size());
  const auto everyone = all_lanes(lanes.size());
  for (std::size_t s = 0; s < tmpl.channels.size(); ++s) {
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      ys[i] = conv_same(lanes[i].h, lanes[i].layers[2 * s], lanes[i].stats);
    }
    norm.apply(ys, everyone, s, 0);
    std::vector<std::size_t> deep;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      auto& lane = lanes[i];
      lane.h = ops::relu(ys[i]);
      if (lane.stats) ++lane.stats->conv_layers;
      const std::size_t d = lane.plan->depth_per_stage;
      if (d > 1) {
        ys[i] = shared_forward(lane.h, lane.layers[2 * s + 1], d - 1, lane.stats);
        deep.push_back(i);
      }
    }
    if (!deep.empty()) norm.apply(ys, deep, s, 1);
    for (auto i : deep) lanes[i].h = ops::relu(ys[i]);
    for (auto& lane : lanes) lane.h = maybe_pool(lane.h);
  }
  return finish(lanes, tmpl);
}

Tensor run_single(const Tensor& x, std::span<const GeneratedLayer> layers,
                  const PlannedNetwork& plan, const PuppetTemplate& tmpl, const NormContext& norm,
                  ForwardStats* stats) {
  std::vector<Lane> lanes{{x, layers, &plan, stats}};
  return run_layers(std::move(lanes), tmpl, norm).front();
}

}  // namespace

Tensor forward(const Tensor& x, std::span<const GeneratedLayer> layers, const PlannedNetwork& plan,
               const PuppetTemplate& tmpl, BnState& bn, Phase phase, const NormOptions& norm,
               ForwardStats* stats) {
  NormContext ctx;
  ctx.opts = norm;
  if (phase == Phase::train) {
    ctx.train = &bn;
  } else {
    ctx.read = &bn;
  }
  return run_single(x, layers, plan, tmpl, ctx, stats);
}

Tensor forward(const Tensor& x, std::span<const GeneratedLayer> layers, const PlannedNetwork& plan,
               const PuppetTemplate& tmpl, const BnState& bn, const NormOptions& norm,
               ForwardStats* stats) {
  NormContext ctx;
  ctx.opts = norm;
  ctx.read = &bn;
  return run_single(x, layers, plan, tmpl, ctx, stats);
}

Tensor shared_forward(const Tensor& x, const GeneratedLayer& layer, std::size_t repeats,
                      ForwardStats* stats) {
  if (repeats < 1) throw ContractViolation("shared_forward: repeats must be >= 1");
  const auto& w = layer.weight.shape();
  if (w.size() != 4 || w[0] != w[1]) {
    throw DimensionError("shared_forward: kernel " + shape_str(w) + " must map C -> C");
  }
  Tensor h = x;
  for (std::size_t r = 0; r < repeats; ++r) {
    h = ops::add(h, conv_same(h, layer, stats));
    if (stats) ++stats->conv_layers;
  }
  return h;
}

Tensor image_to_tensor(const ImageU8& img) {
  const std::size_t C = img.channels, H = img.height, W = img.width;
  std::vector<double> data(C * H * W);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H * W; ++i) data[c * H * W + i] = img.pixels[i * C + c] / 255.0;
  }
  return Tensor::constant({1, C, H, W}, std::move(data));
}

std::string to_string(ParamSource s) {
  switch (s) {
    case ParamSource::puppet: return "puppet";
    case ParamSource::fixed: return "fixed";
    case ParamSource::shared: return "shared";
  }
  return "?";
}

ParamSource param_source_from_string(const std::string& s) {
  if (s == "puppet") return ParamSource::puppet;
  if (s == "fixed") return ParamSource::fixed;
  if (s == "shared") return ParamSource::shared;
  throw ContractViolation("unknown mode '" + s + "' (expected puppet, fixed or shared)");
}

std::string to_string(NormScope s) { return s == NormScope::batch ? "batch" : "sample"; }

NormScope norm_scope_from_string(const std::string& s) {
  if (s == "batch") return NormScope::batch;
  if (s == "sample") return NormScope::sample;
  throw ContractViolation("unknown norm scope '" + s + "' (expected batch or sample)");
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<LayerSpec> shared_layer_specs(const PuppetTemplate& tmpl) {
  std::vector<LayerSpec> specs;
  std::size_t prev = tmpl.in_channels;
  for (auto c : tmpl.channels) {
    specs.push_back({prev, c, tmpl.kernel, LayerRole::conv});
    specs.push_back({c, c, tmpl.kernel, LayerRole::conv});
    prev = c;
  }
  specs.push_back({prev, tmpl.num_classes, 1, LayerRole::head});
  return specs;
}

std::size_t stored_param_count(const ModelConfig& config) {
  switch (config.source) {
    case ParamSource::puppet:
      return puppeteer_param_count(config.tmpl.max_out_channels());
    case ParamSource::fixed:
      return generated_param_count(plan_layers(config.tmpl, config.adapt.pinned_depth));
    case ParamSource::shared: {
      std::size_t n = 0;
      for (const auto& s : shared_layer_specs(config.tmpl)) n += s.param_count();
      return n;
    }
  }
  return 0;
}

namespace {

GeneratedLayer random_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  const std::size_t fan_in = spec.c_in * spec.k * spec.k;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  std::vector<double> w(spec.c_out * fan_in);
  for (auto& v : w) v = dist(rng);
  return {Tensor::parameter({spec.c_out, spec.c_in, spec.k, spec.k}, std::move(w)),
          Tensor::parameter({spec.c_out}, std::vector<double>(spec.c_out, 0.0))};
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.tmpl.validate();
  auto& a = config_.adapt;
  if (a.max_depth < 1 || a.pinned_depth < 1 || a.pinned_depth > a.max_depth) {
    throw ContractViolation("depth options need 1 <= pinned_depth <= max_depth");
  }
  if (!(a.pinned_dl > 0.0 && a.pinned_dl <= 1.0) || !(a.pinned_p0 >= 0.0)) {
    throw ContractViolation("pinned dl must lie in (0, 1] and pinned p0 must be >= 0");
  }
  bn_ = BnState(config_.tmpl, a.max_depth);
  std::mt19937_64 rng(seed);
  switch (config_.source) {
    case ParamSource::puppet:
      puppeteer_ = DerivativeNet::random(config_.tmpl.max_out_channels(), seed);
      break;
    case ParamSource::fixed:
      for (const auto& spec : plan_layers(config_.tmpl, a.pinned_depth).specs) {
        kernels_.push_back(random_layer(spec, rng));
      }
      break;
    case ParamSource::shared:
      for (const auto& spec : shared_layer_specs(config_.tmpl)) {
        kernels_.push_back(random_layer(spec, rng));
      }
      break;
  }
}

AdaptationParams Model::adaptation_for(const ImageU8& img) const {
  if (img.channels != config_.tmpl.in_channels) {
    throw DimensionError("image has " + std::to_string(img.channels) + " channels, model expects " +
                         std::to_string(config_.tmpl.in_channels));
  }
  AdaptationParams a = adapt(complexity(img).combined);
  const auto& opt = config_.adapt;
  if (config_.source == ParamSource::fixed) {
    a.depth = opt.pinned_depth;
    return a;
  }
  if (!opt.param_adapt) {
    a.p0 = opt.pinned_p0;
    a.dl = opt.pinned_dl;
  }
  if (!opt.depth_adapt) a.depth = opt.pinned_depth;
  a.depth = std::min(a.depth, opt.max_depth);
  return a;
}

GeneratedNetwork Model::build(const AdaptationParams& adaptation) const {
  if (config_.source == ParamSource::puppet) {
    return generate_network(puppeteer_, config_.tmpl, adaptation);
  }
  GeneratedNetwork net;
  net.adaptation = adaptation;
  net.plan = plan_layers(config_.tmpl, adaptation.depth);
  net.layers = kernels_;
  return net;
}

std::vector<Tensor> Model::run(std::span<const ImageU8* const> imgs, BnState* train_bn,
                               std::span<ForwardStats> stats,
                               std::span<AdaptationParams> used) const {
  std::vector<GeneratedNetwork> nets;
  nets.reserve(imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const AdaptationParams a = adaptation_for(*imgs[i]);
    if (!used.empty()) used[i] = a;
    nets.push_back(build(a));
  }
  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    lanes.push_back({image_to_tensor(*imgs[i]), nets[i].layers, &nets[i].plan,
                     stats.empty() ? nullptr : &stats[i]});
  }
  NormContext ctx;
  ctx.opts = config_.norm;
  ctx.train = train_bn;
  ctx.read = &bn_;
  if (config_.source == ParamSource::shared) return run_shared(std::move(lanes), config_.tmpl, ctx);
  return run_layers(std::move(lanes), config_.tmpl, ctx);
}

Tensor Model::run(const ImageU8& img, BnState* train_bn, ForwardStats* stats,
                  AdaptationParams* used) const {
  const ImageU8* one[] = {&img};
  return run(one, train_bn, stats ? std::span<ForwardStats>(stats, 1) : std::span<ForwardStats>(),
             used ? std::span<AdaptationParams>(used, 1) : std::span<AdaptationParams>())
      .front();
}

std::vector<Tensor> Model::train_logits(std::span<const ImageU8* const> imgs,
                                        std::span<ForwardStats> stats) {
  if (imgs.empty()) throw ContractViolation("train_logits: empty batch");
  if (!stats.empty() && stats.size() != imgs.size()) {
    throw ContractViolation("train_logits: one ForwardStats per image expected");
  }
  return run(imgs, &bn_, stats, {});
}

Tensor Model::logits(const ImageU8& img, Phase phase, ForwardStats* stats,
                     AdaptationParams* used) {
  return run(img, phase == Phase::train ? &bn_ : nullptr, stats, used);
}

Tensor Model::logits(const ImageU8& img, ForwardStats* stats, AdaptationParams* used) const {
  return run(img, nullptr, stats, used);
}

Prediction Model::predict(const ImageU8& img) const {
  Prediction p;
  const Tensor out = logits(img, nullptr, &p.adaptation);
  p.logits.assign(out.data().begin(), out.data().end());
  p.label = argmax(p.logits);
  return p;
}

std::vector<Tensor*> Model::parameters() {
  if (config_.source == ParamSource::puppet) return puppeteer_.parameters();
  std::vector<Tensor*> out;
  for (auto& k : kernels_) {
    out.push_back(&k.weight);
    out.push_back(&k.bias);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_parameters() const {
  if (config_.source == ParamSource::puppet) return puppeteer_.named_parameters();
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    out.emplace_back("kernels." + std::to_string(i) + ".weight", &kernels_[i].weight);
    out.emplace_back("kernels." + std::to_string(i) + ".bias", &kernels_[i].bias);
  }
  return out;
}

std::size_t Model::stored_param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

}  // namespace pcnn
