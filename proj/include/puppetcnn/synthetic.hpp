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

#include "puppetcnn/dataset.hpp"

namespace pcnn::synthetic {

struct StripeOptions {
  std::size_t count = 600;
  std::size_t size = 16;      // square images
  std::size_t classes = 4;    // orientations spread over 180 degrees
  double noise_stddev = 20.0;
  double min_amplitude = 50.0;
  double max_amplitude = 100.0;
  double min_period = 3.5;
  double max_period = 6.0;
};

/// Grayscale sinusoidal stripes; the label is the orientation index
/// (angle = label * 180 / classes degrees). Labels cycle so classes stay
/// balanced. Random phase, period, amplitude and Gaussian pixel noise.
Dataset oriented_stripes(const StripeOptions& opts, std::uint64_t seed);

/// Half low-complexity images (clean two-level stripes), half noisy stripes,
/// interleaved. Used to exercise depth adaptation.
Dataset mixed_complexity(std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace pcnn::synthetic
