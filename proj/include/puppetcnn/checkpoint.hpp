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

// Checkpoint file (little-endian):
//
//   "PUPCKPT1" u32 array_count
//   per array: u16 name_length, UTF-8 name, u8 dtype (0 = float32),
//              u8 ndim, ndim x u32 extents, payload
//
// Model metadata (template, mode, adaptation options, step) is stored as
// small float32 arrays under "meta.*".

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "puppetcnn/puppet.hpp"

namespace pcnn {

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  /// Throws FormatError when missing.
  const NamedArray& at(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Stored parameters, running statistics and metadata, narrowed to float32.
Checkpoint to_checkpoint(const Model& model, std::size_t step);

/// Rebuilds a model; `step` receives the stored optimiser step when non-null.
Model model_from_checkpoint(const Checkpoint& ckpt, std::size_t* step = nullptr);

}  // namespace pcnn
