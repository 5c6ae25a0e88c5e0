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

#include "puppetcnn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>

#include "binary_io.hpp"
#include "puppetcnn/errors.hpp"

namespace pcnn {

namespace {
constexpr std::uint8_t kVersion = 1;
}

std::vector<std::uint8_t> encode_images(std::span<const ImageU8> images) {
  io::ByteWriter w;
  w.raw("PNIM");
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(images.size()));
  const ImageU8* first = images.empty() ? nullptr : &images.front();
  w.u32(first ? static_cast<std::uint32_t>(first->height) : 0);
  w.u32(first ? static_cast<std::uint32_t>(first->width) : 0);
  w.u32(first ? static_cast<std::uint32_t>(first->channels) : 1);
  for (const auto& img : images) {
    if (img.height != first->height || img.width != first->width ||
        img.channels != first->channels) {
      throw DimensionError("all images in a dataset file must share one shape");
    }
    w.raw(img.pixels);
  }
  return w.buffer();
}

std::vector<std::uint8_t> encode_labels(std::span<const std::uint8_t> labels) {
  io::ByteWriter w;
  w.raw("PNLB");
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(labels.size()));
  w.raw(labels);
  return w.buffer();
}

std::vector<ImageU8> decode_images(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("PNIM");
  const std::size_t version_at = r.offset();
  if (r.u8("version") != kVersion) throw FormatError("unsupported images.bin version", version_at);
  const std::uint32_t count = r.u32("count");
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::size_t channels_at = r.offset();
  const std::uint32_t c = r.u32("channels");
  std::vector<ImageU8> out;
  if (count == 0) {
    if (r.remaining() != 0) throw FormatError("trailing bytes after empty image set", r.offset());
    return out;
  }
  if (c != 1 && c != 3) throw FormatError("channels must be 1 or 3", channels_at);
  if (h == 0 || w == 0) throw FormatError("image extents must be positive", channels_at);
  const std::size_t per_image = std::size_t{h} * w * c;
  if (r.remaining() != per_image * count) {
    throw FormatError("count field says " + std::to_string(count) + " images (" +
                          std::to_string(per_image * count) + " payload bytes) but " +
                          std::to_string(r.remaining()) + " bytes follow",
                      r.offset());
  }
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto px = r.bytes(per_image, "pixels");
    out.emplace_back(h, w, c, std::vector<std::uint8_t>(px.begin(), px.end()));
  }
  return out;
}

std::vector<std::uint8_t> decode_labels(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("PNLB");
  const std::size_t version_at = r.offset();
  if (r.u8("version") != kVersion) throw FormatError("unsupported labels.bin version", version_at);
  const std::uint32_t count = r.u32("count");
  if (r.remaining() != count) {
    throw FormatError("count field says " + std::to_string(count) + " labels but " +
                          std::to_string(r.remaining()) + " bytes follow",
                      r.offset());
  }
  const auto b = r.bytes(count, "labels");
  return {b.begin(), b.end()};
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.images = decode_images(io::read_file(dir / "images.bin"));
  ds.labels = decode_labels(io::read_file(dir / "labels.bin"));
  if (ds.images.size() != ds.labels.size()) {
    throw FormatError(std::to_string(ds.images.size()) + " images but " +
                      std::to_string(ds.labels.size()) + " labels in " + dir.string());
  }
  ds.split = dir.filename().string();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  if (ds.images.size() != ds.labels.size()) {
    throw ContractViolation("dataset has mismatched image and label counts");
  }
  std::filesystem::create_directories(dir);
  io::write_file(dir / "images.bin", encode_images(ds.images));
  io::write_file(dir / "labels.bin", encode_labels(ds.labels));
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& ds, double fraction,
                                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ContractViolation("split fraction must lie in [0, 1)");
  }
  std::map<std::uint8_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<bool> held(ds.size(), false);
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < take; ++i) held[idx[i]] = true;
  }
  Dataset keep, hold;
  keep.split = ds.split.empty() ? "train" : ds.split;
  hold.split = "val";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Dataset& dst = held[i] ? hold : keep;
    dst.images.push_back(ds.images[i]);
    dst.labels.push_back(ds.labels[i]);
  }
  return {std::move(keep), std::move(hold)};
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::size_t pnm_token(std::span<const std::uint8_t> b, std::size_t& pos) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  std::size_t v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
  if (pos == start) throw FormatError("malformed PNM header", start);
  return v;
}

}  // namespace

ImageU8 read_pnm(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file: " + path.string(), 0);
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const std::size_t width = pnm_token(bytes, pos);
  const std::size_t height = pnm_token(bytes, pos);
  const std::size_t maxval = pnm_token(bytes, pos);
  if (maxval != 255) throw FormatError("only 8-bit PNM (maxval 255) is supported", pos);
  if (width == 0 || height == 0) throw FormatError("PNM extents must be positive", pos);
  ++pos;  // single whitespace before raster
  const std::size_t need = width * height * channels;
  if (pos > bytes.size() || bytes.size() - pos < need) {
    throw FormatError("truncated PNM raster", std::min(pos, bytes.size()));
  }
  return ImageU8(height, width, channels,
                 std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                           bytes.begin() + static_cast<std::ptrdiff_t>(pos + need)));
}

void write_pnm(const ImageU8& img, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.raw(std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) + " " +
        std::to_string(img.height) + "\n255\n");
  w.raw(img.pixels);
  io::write_file(path, w.buffer());
}

}  // namespace pcnn
