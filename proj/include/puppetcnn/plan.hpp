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
#include <string>
#include <vector>

namespace pcnn {

enum class Topology { plain, residual };

/// Skeleton of the puppet network. Depth per stage is decided per input.
struct PuppetTemplate {
  std::vector<std::size_t> channels{64, 128, 256, 512};
  std::size_t kernel = 3;
  std::size_t num_classes = 10;
  std::size_t in_channels = 3;
  Topology topology = Topology::plain;

  /// Largest output-channel count of any generated layer (head included).
  std::size_t max_out_channels() const;
  /// Largest input-channel count of any generated layer (head included).
  std::size_t max_in_channels() const;
  void validate() const;
};

/// Channel list scaled by `width` (rounded, at least 1 per stage).
std::vector<std::size_t> scaled_channels(double width,
                                         const std::vector<std::size_t>& base = {64, 128, 256,
                                                                                 512});

enum class LayerRole { conv, head };

struct LayerSpec {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t k = 3;
  LayerRole role = LayerRole::conv;

  std::size_t param_count() const { return c_out * (c_in * k * k + 1); }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct PlannedNetwork {
  std::vector<LayerSpec> specs;      // convs in execution order, head last
  std::vector<std::size_t> pool_after;  // last layer index of every stage
  std::size_t depth_per_stage = 1;

  std::size_t conv_count() const { return specs.empty() ? 0 : specs.size() - 1; }
  bool pools_after(std::size_t layer) const;
};

/// `d` conv layers per channel stage followed by one 1x1 head.
PlannedNetwork plan_layers(const PuppetTemplate& tmpl, std::size_t d);

/// Weights + biases of every planned layer.
std::size_t generated_param_count(const PlannedNetwork& plan);

/// Multiply-adds of one forward pass on an H x W input: every conv costs
/// c_out * H' * W' * c_in * k^2, the head c_out * c_in.
std::size_t plan_multadds(const PlannedNetwork& plan, std::size_t height, std::size_t width);

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

}  // namespace pcnn
