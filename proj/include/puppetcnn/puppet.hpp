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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "puppetcnn/complexity.hpp"
#include "puppetcnn/ops.hpp"
#include "puppetcnn/plan.hpp"
#include "puppetcnn/puppeteer.hpp"
#include "puppetcnn/tensor.hpp"

namespace pcnn {

/// Running statistics of the affine-free puppet batch norms, one slot per
/// (stage, layer-within-stage) up to a maximum depth.
class BnState {
 public:
  BnState() = default;
  BnState(const PuppetTemplate& tmpl, std::size_t max_depth);

  std::size_t stages() const { return slots_.size(); }
  std::size_t max_depth() const { return max_depth_; }
  ops::RunningStats& at(std::size_t stage, std::size_t layer);
  const ops::RunningStats& at(std::size_t stage, std::size_t layer) const;

 private:
  std::size_t max_depth_ = 0;
  std::vector<std::vector<ops::RunningStats>> slots_;
};

/// Which activations train-phase batch norm takes its statistics over.
///   batch:  every sample of the training batch that reaches the slot
///   sample: each sample alone
enum class NormScope { batch, sample };

std::string to_string(NormScope s);
NormScope norm_scope_from_string(const std::string& s);

struct NormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
  NormScope scope = NormScope::batch;
};

/// Counters filled by forward().
struct ForwardStats {
  std::size_t conv_layers = 0;
  std::size_t multadds = 0;
};

/// Train mode: batch statistics, running stats in `bn` updated. Infer mode:
/// running stats only, `bn` unchanged.
enum class Phase { train, infer };

/// Executes a generated (or stored) network on x: [1, C_in, H, W] and
/// returns logits of shape (num_classes).
///
/// Every conv layer is conv (stride 1, same padding) -> batch norm -> ReLU;
/// in residual topology a layer with c_in == c_out adds its input before the
/// norm. Stages end with a 2x2 max-pool when both spatial dims are >= 2. The
/// head is a generated 1x1 map applied after global average pooling.
Tensor forward(const Tensor& x, std::span<const GeneratedLayer> layers, const PlannedNetwork& plan,
               const PuppetTemplate& tmpl, BnState& bn, Phase phase, const NormOptions& norm = {},
               ForwardStats* stats = nullptr);

/// Inference-only overload; safe to call concurrently.
Tensor forward(const Tensor& x, std::span<const GeneratedLayer> layers, const PlannedNetwork& plan,
               const PuppetTemplate& tmpl, const BnState& bn, const NormOptions& norm = {},
               ForwardStats* stats = nullptr);

/// X <- X + Conv(X, layer) applied `repeats` times with one shared kernel.
Tensor shared_forward(const Tensor& x, const GeneratedLayer& layer, std::size_t repeats,
                      ForwardStats* stats = nullptr);

/// Pixels scaled to [0, 1], shape [1, C, H, W].
Tensor image_to_tensor(const ImageU8& img);

/// Where the convolution kernels come from.
///   puppet: generated by the puppeteer per input
///   fixed:  stored per layer (conventional CNN), depth pinned
///   shared: one stored transition + one shared residual kernel per stage
enum class ParamSource { puppet, fixed, shared };

std::string to_string(ParamSource s);
ParamSource param_source_from_string(const std::string& s);

struct AdaptOptions {
  bool depth_adapt = true;  // false pins D to pinned_depth
  bool param_adapt = true;  // false pins p0 and dl
  std::size_t pinned_depth = 1;
  double pinned_p0 = 1.0;
  double pinned_dl = 0.5;
  std::size_t max_depth = 64;
};

struct ModelConfig {
  PuppetTemplate tmpl;
  ParamSource source = ParamSource::puppet;
  AdaptOptions adapt;
  NormOptions norm;
};

struct Prediction {
  std::size_t label = 0;
  AdaptationParams adaptation;
  std::vector<double> logits;
};

/// Index of the largest value; ties go to the lower index.
std::size_t argmax(std::span<const double> values);

/// Everything that is stored for a model: puppeteer (or stored kernels) and
/// running batch-norm statistics.
class Model {
 public:
  Model() = default;
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const PuppetTemplate& tmpl() const { return config_.tmpl; }

  /// Complexity-driven (dl, D, p0) after the pinning options are applied.
  AdaptationParams adaptation_for(const ImageU8& img) const;

  /// Kernels for one input (graph-connected to the trainable parameters).
  GeneratedNetwork build(const AdaptationParams& adaptation) const;

  /// logits for `img`; train phase updates the running statistics.
  Tensor logits(const ImageU8& img, Phase phase, ForwardStats* stats = nullptr,
                AdaptationParams* used = nullptr);
  Tensor logits(const ImageU8& img, ForwardStats* stats = nullptr,
                AdaptationParams* used = nullptr) const;

  Prediction predict(const ImageU8& img) const;

  /// Train-phase logits for a batch; the running statistics are updated
  /// once per slot. Kernels are still generated per sample.
  std::vector<Tensor> train_logits(std::span<const ImageU8* const> imgs,
                                   std::span<ForwardStats> stats = {});

  std::vector<Tensor*> parameters();
  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
  std::size_t stored_param_count() const;

  DerivativeNet& puppeteer() { return puppeteer_; }
  const DerivativeNet& puppeteer() const { return puppeteer_; }
  std::vector<GeneratedLayer>& kernels() { return kernels_; }
  const std::vector<GeneratedLayer>& kernels() const { return kernels_; }
  BnState& bn() { return bn_; }
  const BnState& bn() const { return bn_; }

 private:
  Tensor run(const ImageU8& img, BnState* train_bn, ForwardStats* stats,
             AdaptationParams* used) const;
  std::vector<Tensor> run(std::span<const ImageU8* const> imgs, BnState* train_bn,
                          std::span<ForwardStats> stats, std::span<AdaptationParams> used) const;

  ModelConfig config_;
  DerivativeNet puppeteer_;             // puppet source
  std::vector<GeneratedLayer> kernels_;  // fixed / shared sources
  BnState bn_;
};

/// Layer shapes stored by the shared source: per stage a transition and a
/// shared kernel, then the head.
std::vector<LayerSpec> shared_layer_specs(const PuppetTemplate& tmpl);

/// Stored parameter count for a configuration without building the model.
std::size_t stored_param_count(const ModelConfig& config);

}  // namespace pcnn
