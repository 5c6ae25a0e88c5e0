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

// Model-size studies: stored vs generated parameter counts across the
// maximum channel width and across depth.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "puppetcnn/puppet.hpp"

namespace pcnn::analysis {

inline constexpr double kBytesPerParam = 4.0;
inline constexpr double kMiB = 1024.0 * 1024.0;

/// Template whose stages follow the 1:2:4:8 channel ratio ending at c_max.
PuppetTemplate template_for_cmax(std::size_t c_max, std::size_t num_classes = 10,
                                 std::size_t in_channels = 3);

struct ParamRow {
  std::size_t c_max = 0;
  std::size_t stored_params = 0;
  std::size_t stored_bytes_f32 = 0;
  std::map<std::size_t, std::size_t> generated_params_at_depth;

  double stored_mib() const { return static_cast<double>(stored_bytes_f32) / kMiB; }
};

struct ParamReport {
  std::vector<std::size_t> depths;
  std::vector<ParamRow> rows;  // sorted by c_max
};

ParamReport analyze_params(std::span<const std::size_t> c_max_list,
                           std::span<const std::size_t> depths);

/// Header "c_max,stored_params,stored_bytes_f32,stored_mib,generated_d<d>...".
std::string to_csv(const ParamReport& report);

struct SweepRow {
  std::size_t depth = 0;
  std::size_t stored_params = 0;
  std::size_t generated_params = 0;
  std::size_t multadds = 0;
};

/// Stored and generated parameters plus multiply-adds on an
/// image_size x image_size input for each depth (rows sorted by depth).
std::vector<SweepRow> sweep_depth(const PuppetTemplate& tmpl, ParamSource source,
                                  std::span<const std::size_t> depths, std::size_t image_size);

/// Header "depth,stored_params,generated_params,multadds".
std::string to_csv(std::span<const SweepRow> rows);

}  // namespace pcnn::analysis
