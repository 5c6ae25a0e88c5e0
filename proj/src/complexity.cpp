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

#include "puppetcnn/complexity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "puppetcnn/errors.hpp"

namespace pcnn {

ImageU8::ImageU8(std::size_t h, std::size_t w, std::size_t c, std::vector<std::uint8_t> px)
    : height(h), width(w), channels(c), pixels(std::move(px)) {
  if (h == 0 || w == 0) throw DimensionError("image must be non-empty");
  if (c != 1 && c != 3) throw DimensionError("image must have 1 or 3 channels");
  if (pixels.size() != h * w * c) {
    throw DimensionError("image " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                         std::to_string(c) + " has " + std::to_string(pixels.size()) + " bytes");
  }
}

std::vector<std::uint8_t> grayscale(const ImageU8& img) {
  const std::size_t n = img.height * img.width;
  if (n == 0) throw DimensionError("image must be non-empty");
  if (img.channels == 1) return img.pixels;
  std::vector<std::uint8_t> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lum = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
                       0.114 * img.pixels[3 * i + 2];
    gray[i] = static_cast<std::uint8_t>(std::clamp(std::floor(lum + 0.5), 0.0, 255.0));
  }
  return gray;
}

double histogram_entropy(std::span<const std::uint8_t> values) {
  std::array<std::size_t, 256> hist{};
  for (auto v : values) ++hist[v];
  const auto n = static_cast<double>(values.size());
  double h = 0.0;
  for (auto count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  // -sum over a single bin yields -0.0
  return h <= 0.0 ? 0.0 : h;
}

double pixel_entropy(const ImageU8& img) { return histogram_entropy(grayscale(img)); }

Tensor dft2_magnitude(const ImageU8& img) {
  const auto gray = grayscale(img);
  const std::size_t H = img.height, W = img.width;

  // Row-column decomposition of the exact DFT; twiddles indexed by (k*n mod N).
  auto twiddles = [](std::size_t n) {
    std::vector<double> re(n), im(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      re[k] = std::cos(angle);
      im[k] = std::sin(angle);
    }
    return std::pair{re, im};
  };
  const auto [wr, wi] = twiddles(W);
  const auto [hr, hi] = twiddles(H);

  std::vector<double> row_re(H * W, 0.0), row_im(H * W, 0.0);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t kx = 0; kx < W; ++kx) {
      double re = 0.0, im = 0.0;
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t t = (kx * x) % W;
        const double v = gray[y * W + x];
        re += v * wr[t];
        im += v * wi[t];
      }
      row_re[y * W + kx] = re;
      row_im[y * W + kx] = im;
    }
  }
  std::vector<double> mag(H * W);
  for (std::size_t ky = 0; ky < H; ++ky) {
    for (std::size_t kx = 0; kx < W; ++kx) {
      double re = 0.0, im = 0.0;
      for (std::size_t y = 0; y < H; ++y) {
        const std::size_t t = (ky * y) % H;
        const double a = row_re[y * W + kx], b = row_im[y * W + kx];
        re += a * hr[t] - b * hi[t];
        im += a * hi[t] + b * hr[t];
      }
      mag[ky * W + kx] = std::hypot(re, im);
    }
  }
  return Tensor::constant({H, W}, std::move(mag));
}

double frequency_entropy(const ImageU8& img) {
  const Tensor spectrum = dft2_magnitude(img);
  const auto mag = spectrum.data();
  const auto [lo_it, hi_it] = std::minmax_element(mag.begin(), mag.end());
  const double lo = *lo_it, hi = *hi_it;
  // Rounding noise in the transform must not turn a flat spectrum into bins.
  if (hi - lo <= 1e-9 * std::max(1.0, std::abs(hi))) return 0.0;
  std::vector<std::uint8_t> q(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double scaled = (mag[i] - lo) / (hi - lo) * 255.0;
    q[i] = static_cast<std::uint8_t>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
  }
  return histogram_entropy(q);
}

ComplexityScore complexity(const ImageU8& img) {
  ComplexityScore s;
  s.pixel_entropy = pixel_entropy(img);
  s.frequency_entropy = frequency_entropy(img);
  s.combined = 0.5 * s.pixel_entropy + 0.5 * s.frequency_entropy;
  return s;
}

AdaptationParams adapt(double h) {
  if (!(h >= 0.0)) throw ContractViolation("adapt: complexity must be >= 0");
  AdaptationParams a;
  a.h = h;
  if (h < kMinComplexity) return a;
  a.dl = std::tanh(1.0 / h);
  a.depth = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / a.dl)));
  a.p0 = std::exp(1.0 - 1.0 / (h * h));
  return a;
}

}  // namespace pcnn
