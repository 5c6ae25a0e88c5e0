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


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "puppetcnn/complexity.hpp"
#include "puppetcnn/errors.hpp"

namespace pcnn {
namespace {

ImageU8 gray_image(std::size_t h, std::size_t w, std::vector<std::uint8_t> px) {
  return ImageU8(h, w, 1, std::move(px));
}

ImageU8 random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> px(h * w);
  for (auto& p : px) p = static_cast<std::uint8_t>(d(rng));
  return gray_image(h, w, std::move(px));
}

TEST(PixelEntropyTest, ConstantImageIsZero) {
  EXPECT_EQ(pixel_entropy(gray_image(4, 4, std::vector<std::uint8_t>(16, 77))), 0.0);
}

TEST(PixelEntropyTest, FairCoinIsOneBit) {
  std::vector<std::uint8_t> px(16);
  for (std::size_t i = 0; i < 16; ++i) px[i] = i % 2 ? 200 : 10;
  EXPECT_NEAR(pixel_entropy(gray_image(4, 4, px)), 1.0, 1e-12);
}

TEST(PixelEntropyTest, UniformHistogramIsEightBits) {
  std::vector<std::uint8_t> px(256);
  for (std::size_t i = 0; i < 256; ++i) px[i] = static_cast<std::uint8_t>(i);
  EXPECT_NEAR(pixel_entropy(gray_image(16, 16, px)), 8.0, 1e-12);
}

TEST(PixelEntropyTest, RgbUsesRoundedLuminance) {
  // (255, 0, 0) -> 76.245 -> 76; (0, 0, 255) -> 29.07 -> 29.
  const ImageU8 img(1, 2, 3, {255, 0, 0, 0, 0, 255});
  EXPECT_EQ(grayscale(img), (std::vector<std::uint8_t>{76, 29}));
  EXPECT_NEAR(pixel_entropy(img), 1.0, 1e-12);
}

TEST(PixelEntropyTest, InvariantUnderPermutation) {
  const ImageU8 img = random_image(9, 7, 31);
  std::mt19937_64 rng(32);
  for (int t = 0; t < 10; ++t) {
    ImageU8 shuffled = img;
    std::shuffle(shuffled.pixels.begin(), shuffled.pixels.end(), rng);
    EXPECT_EQ(pixel_entropy(shuffled), pixel_entropy(img));
  }
}

TEST(PixelEntropyTest, RangeIsZeroToEight) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double e = pixel_entropy(random_image(12, 12, s));
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 8.0);
  }
}

TEST(Dft2Test, ConstantImageIsDcOnly) {
  const Tensor y = dft2_magnitude(gray_image(4, 6, std::vector<std::uint8_t>(24, 9)));
  EXPECT_EQ(y.shape(), (Shape{4, 6}));
  EXPECT_NEAR(y[0], 9.0 * 24, 1e-9);
  for (std::size_t i = 1; i < y.size(); ++i) EXPECT_NEAR(y[i], 0.0, 1e-9);
}

TEST(Dft2Test, ImpulseIsFlat) {
  std::vector<std::uint8_t> px(35, 0);
  px[17] = 1;
  const Tensor y = dft2_magnitude(gray_image(5, 7, px));
  for (double v : y.data()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Dft2Test, MatchesNaiveDft) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ImageU8 img = random_image(8, 8, 40 + s);
    const Tensor y = dft2_magnitude(img);
    EXPECT_LT(oracle::max_abs_diff(y.data(), oracle::dft_magnitude(img.pixels, 8, 8)), 1e-6);
  }
  const ImageU8 odd = random_image(5, 9, 49);
  EXPECT_LT(oracle::max_abs_diff(dft2_magnitude(odd).data(), oracle::dft_magnitude(odd.pixels, 5, 9)),
            1e-6);
}

TEST(Dft2Test, DcEqualsPixelSum) {
  const ImageU8 img = random_image(6, 10, 50);
  double total = 0.0;
  for (auto p : img.pixels) total += p;
  EXPECT_NEAR(dft2_magnitude(img)[0], total, 1e-6 * total);
}

TEST(FrequencyEntropyTest, ConstantImageIsTwoBinClosedForm) {
  const std::size_t n = 8 * 8;
  const double e = frequency_entropy(gray_image(8, 8, std::vector<std::uint8_t>(n, 120)));
  EXPECT_NEAR(e, oracle::one_of_n_entropy(double(n)), 1e-12);
}

TEST(FrequencyEntropyTest, AllZeroImageIsZero) {
  EXPECT_EQ(frequency_entropy(gray_image(4, 4, std::vector<std::uint8_t>(16, 0))), 0.0);
}

TEST(FrequencyEntropyTest, ImpulseIsZero) {
  std::vector<std::uint8_t> px(64, 0);
  px[9] = 255;
  EXPECT_EQ(frequency_entropy(gray_image(8, 8, px)), 0.0);
}

TEST(FrequencyEntropyTest, MatchesIndependentPipeline) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ImageU8 img = random_image(8, 8, 60 + s);
    const double ref = oracle::quantized_entropy(oracle::dft_magnitude(img.pixels, 8, 8));
    EXPECT_NEAR(frequency_entropy(img), ref, 1e-12) << "seed " << s;
  }
}

TEST(ComplexityTest, CombinedIsMeanOfParts) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto c = complexity(random_image(10, 6, 70 + s));
    EXPECT_EQ(c.combined, 0.5 * c.pixel_entropy + 0.5 * c.frequency_entropy);
  }
}

TEST(ComplexityTest, ConstantImageComposesOracles) {
  const auto c = complexity(gray_image(8, 8, std::vector<std::uint8_t>(64, 33)));
  EXPECT_EQ(c.pixel_entropy, 0.0);
  EXPECT_NEAR(c.combined, 0.5 * oracle::one_of_n_entropy(64.0), 1e-12);
}

TEST(ComplexityTest, RotationKeepsPixelEntropy) {
  const ImageU8 img = random_image(5, 8, 80);
  ImageU8 rot(8, 5, 1, std::vector<std::uint8_t>(40));
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 8; ++x) rot.pixels[x * 5 + (4 - y)] = img.at(y, x);
  EXPECT_EQ(complexity(rot).pixel_entropy, complexity(img).pixel_entropy);
}

TEST(ComplexityTest, DeterministicBits) {
  const ImageU8 img = random_image(16, 16, 81);
  const auto a = complexity(img);
  const auto b = complexity(ImageU8(img));
  EXPECT_EQ(a.pixel_entropy, b.pixel_entropy);
  EXPECT_EQ(a.frequency_entropy, b.frequency_entropy);
  EXPECT_EQ(a.combined, b.combined);
}

TEST(ComplexityTest, EmptyImageThrows) {
  EXPECT_THROW(pixel_entropy(ImageU8()), DimensionError);
}

TEST(AdaptTest, ZeroLimit) {
  for (double h : {0.0, 1e-12}) {
    const auto a = adapt(h);
    EXPECT_EQ(a.dl, 1.0);
    EXPECT_EQ(a.depth, 1u);
    EXPECT_EQ(a.p0, 0.0);
  }
}

TEST(AdaptTest, HEqualsOne) {
  const auto a = adapt(1.0);
  EXPECT_NEAR(a.dl, 0.761594, 1e-6);
  EXPECT_EQ(a.depth, 1u);
  EXPECT_NEAR(a.p0, 1.0, 1e-12);
}

TEST(AdaptTest, HEqualsEight) {
  const auto a = adapt(8.0);
  EXPECT_NEAR(a.dl, 0.124353, 1e-6);
  EXPECT_EQ(a.depth, 8u);
  EXPECT_NEAR(a.p0, std::exp(1.0 - 1.0 / 64.0), 1e-12);
}

TEST(AdaptTest, NegativeThrows) {
  EXPECT_THROW(adapt(-0.5), ContractViolation);
  EXPECT_THROW(adapt(NAN), ContractViolation);
}

TEST(AdaptTest, MonotoneAndFloorCharacterized) {
  std::mt19937_64 rng(90);
  std::uniform_real_distribution<double> hd(1e-3, 8.0);
  for (int t = 0; t < 1000; ++t) {
    double h1 = hd(rng), h2 = hd(rng);
    if (h1 == h2) continue;
    if (h1 > h2) std::swap(h1, h2);
    const auto a1 = adapt(h1), a2 = adapt(h2);
    EXPECT_LT(a2.dl, a1.dl);
    EXPECT_GE(a2.depth, a1.depth);
    for (const auto& a : {a1, a2}) {
      EXPECT_GT(a.dl, 0.0);
      EXPECT_LE(a.dl, 1.0);
      EXPECT_GE(a.depth, 1u);
      EXPECT_LE(double(a.depth) * a.dl, 1.0);
      EXPECT_GT(double(a.depth + 1) * a.dl, 1.0);
    }
  }
}

}  // namespace
}  // namespace pcnn
