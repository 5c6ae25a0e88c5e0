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

#include "puppetcnn/plan.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "puppetcnn/errors.hpp"

namespace pcnn {

std::size_t PuppetTemplate::max_out_channels() const {
  std::size_t m = num_classes;
  for (auto c : channels) m = std::max(m, c);
  return m;
}

std::size_t PuppetTemplate::max_in_channels() const {
  std::size_t m = in_channels;
  for (auto c : channels) m = std::max(m, c);
  return m;
}

void PuppetTemplate::validate() const {
  if (channels.empty()) throw ContractViolation("template needs at least one channel stage");
  std::set<std::size_t> seen;
  for (auto c : channels) {
    if (c == 0) throw ContractViolation("template channels must be positive");
    if (!seen.insert(c).second) throw ContractViolation("template channels must be distinct");
  }
  if (kernel == 0 || kernel % 2 == 0) throw ContractViolation("kernel size must be odd");
  if (num_classes == 0) throw ContractViolation("num_classes must be positive");
  if (in_channels != 1 && in_channels != 3) {
    throw ContractViolation("in_channels must be 1 or 3");
  }
}

std::vector<std::size_t> scaled_channels(double width, const std::vector<std::size_t>& base) {
  if (!(width > 0.0)) throw ContractViolation("width factor must be > 0");
  std::vector<std::size_t> out;
  for (auto c : base) {
    out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(c * width))));
  }
  return out;
}

bool PlannedNetwork::pools_after(std::size_t layer) const {
  return std::find(pool_after.begin(), pool_after.end(), layer) != pool_after.end();
}

PlannedNetwork plan_layers(const PuppetTemplate& tmpl, std::size_t d) {
  if (d < 1) throw ContractViolation("plan_layers: depth must be >= 1");
  tmpl.validate();
  PlannedNetwork plan;
  plan.depth_per_stage = d;
  std::size_t prev = tmpl.in_channels;
  for (auto stage : tmpl.channels) {
    for (std::size_t i = 0; i < d; ++i) {
      plan.specs.push_back({i == 0 ? prev : stage, stage, tmpl.kernel, LayerRole::conv});
    }
    plan.pool_after.push_back(plan.specs.size() - 1);
    prev = stage;
  }
  plan.specs.push_back({prev, tmpl.num_classes, 1, LayerRole::head});
  return plan;
}

std::size_t generated_param_count(const PlannedNetwork& plan) {
  std::size_t total = 0;
  for (const auto& s : plan.specs) total += s.param_count();
  return total;
}

std::size_t plan_multadds(const PlannedNetwork& plan, std::size_t height, std::size_t width) {
  std::size_t total = 0;
  std::size_t h = height, w = width;
  for (std::size_t i = 0; i < plan.specs.size(); ++i) {
    const auto& s = plan.specs[i];
    if (s.role == LayerRole::head) {
      total += s.c_out * s.c_in;
      continue;
    }
    total += s.c_out * h * w * s.c_in * s.k * s.k;
    if (plan.pools_after(i) && h >= 2 && w >= 2) {
      h /= 2;
      w /= 2;
    }
  }
  return total;
}

std::string to_string(Topology t) { return t == Topology::plain ? "plain" : "residual"; }

Topology topology_from_string(const std::string& s) {
  if (s == "plain") return Topology::plain;
  if (s == "residual") return Topology::residual;
  throw ContractViolation("unknown topology '" + s + "' (expected plain or residual)");
}

}  // namespace pcnn
