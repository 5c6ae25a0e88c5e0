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

// On-disk dataset layout (little-endian):
//
//   images.bin  "PNIM" u8 version=1 u32 count u32 height u32 width u32 channels
//               then count*height*width*channels raw u8 pixels (row-major,
//               channel-interleaved)
//   labels.bin  "PNLB" u8 version=1 u32 count, then count u8 labels

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "puppetcnn/complexity.hpp"

namespace pcnn {

struct Dataset {
  std::vector<ImageU8> images;
  std::vector<std::uint8_t> labels;
  std::string split;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
};

std::vector<std::uint8_t> encode_images(std::span<const ImageU8> images);
std::vector<std::uint8_t> encode_labels(std::span<const std::uint8_t> labels);
std::vector<ImageU8> decode_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> decode_labels(std::span<const std::uint8_t> bytes);

/// Reads dir/images.bin and dir/labels.bin. Throws FormatError.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Seeded split keeping `fraction` of every class (rounded) in the second part.
std::pair<Dataset, Dataset> split_stratified(const Dataset& ds, double fraction,
                                             std::uint64_t seed);

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
ImageU8 read_pnm(const std::filesystem::path& path);
void write_pnm(const ImageU8& img, const std::filesystem::path& path);

}  // namespace pcnn
