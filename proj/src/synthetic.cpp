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

#include "puppetcnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "puppetcnn/errors.hpp"

namespace pcnn::synthetic {

namespace {

ImageU8 stripe_image(std::size_t size, double angle, double period, double phase, double amplitude,
                     double noise, bool binary, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<std::uint8_t> px(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double t = 2.0 * std::numbers::pi * (x * c + y * s) / period + phase;
      double v = binary ? (std::sin(t) >= 0.0 ? 160.0 : 96.0) : 128.0 + amplitude * std::sin(t);
      if (noise > 0.0) v += noise * gauss(rng);
      px[y * size + x] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return ImageU8(size, size, 1, std::move(px));
}

}  // namespace

Dataset oriented_stripes(const StripeOptions& opts, std::uint64_t seed) {
  if (opts.classes == 0 || opts.classes > 256 || opts.size == 0) {
    throw ContractViolation("oriented_stripes: need 1..256 classes and a positive size");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset ds;
  ds.split = "synthetic";
  for (std::size_t i = 0; i < opts.count; ++i) {
    const std::size_t label = i % opts.classes;
    const double angle = std::numbers::pi * static_cast<double>(label) / opts.classes;
    const double period = opts.min_period + (opts.max_period - opts.min_period) * unit(rng);
    const double amplitude =
        opts.min_amplitude + (opts.max_amplitude - opts.min_amplitude) * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    ds.images.push_back(
        stripe_image(opts.size, angle, period, phase, amplitude, opts.noise_stddev, false, rng));
    ds.labels.push_back(static_cast<std::uint8_t>(label));
  }
  return ds;
}

Dataset mixed_complexity(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset ds;
  ds.split = "mixed";
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = (i / 2) % 4;
    const double angle = std::numbers::pi * static_cast<double>(label) / 4.0;
    const double period = 4.0 + 2.0 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const bool simple = i % 2 == 0;
    ds.images.push_back(stripe_image(size, angle, period, phase, 80.0, simple ? 0.0 : 40.0, simple,
                                     rng));
    ds.labels.push_back(static_cast<std::uint8_t>(label));
  }
  return ds;
}

}  // namespace pcnn::synthetic
