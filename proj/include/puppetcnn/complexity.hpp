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
#include <vector>

#include "puppetcnn/tensor.hpp"

namespace pcnn {

/// 8-bit image, row-major, channels interleaved (RGBRGB...).
struct ImageU8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(std::size_t h, std::size_t w, std::size_t c, std::vector<std::uint8_t> px);

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
};

struct ComplexityScore {
  double pixel_entropy = 0.0;
  double frequency_entropy = 0.0;
  double combined = 0.0;
};

/// Per-input adaptation record derived from the complexity score.
struct AdaptationParams {
  double h = 0.0;
  double dl = 1.0;      // Euler step size
  std::size_t depth = 1;  // layers per channel stage
  double p0 = 0.0;      // constant filling the initial ODE state
};

/// Scores below this are treated as zero when adapting.
inline constexpr double kMinComplexity = 1e-9;

/// Rounded luminance plane (0.299R + 0.587G + 0.114B for colour input).
std::vector<std::uint8_t> grayscale(const ImageU8& img);

/// Shannon entropy in bits of a 256-bin histogram of `values`.
double histogram_entropy(std::span<const std::uint8_t> values);

double pixel_entropy(const ImageU8& img);

/// |DFT| of the grayscale plane, shape [H, W].
Tensor dft2_magnitude(const ImageU8& img);

/// Entropy of the magnitude spectrum after min-max quantisation to 0..255.
/// A flat spectrum scores 0.
double frequency_entropy(const ImageU8& img);

ComplexityScore complexity(const ImageU8& img);

/// dl = tanh(1/h), D = floor(1/dl), p0 = exp(1 - 1/h^2); limits (1, 1, 0)
/// for h below kMinComplexity. Throws ContractViolation for h < 0.
AdaptationParams adapt(double h);

}  // namespace pcnn
