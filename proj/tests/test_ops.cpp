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
#include <functional>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "puppetcnn/errors.hpp"
#include "puppetcnn/ops.hpp"

namespace pcnn {
namespace {

// Projects an op's output onto fixed random weights so every output slot
// contributes a distinct amount to the scalar loss.
Tensor project(const Tensor& y, std::mt19937_64& rng) {
  return ops::sum(ops::mul(y, Tensor::constant(y.shape(), oracle::random_values(y.size(), rng))));
}

TEST(Conv2dTest, IdentityKernel) {
  const Tensor x = Tensor::constant({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor y = ops::conv2d(x, Tensor::full({1, 1, 1, 1}, 1.0), Tensor::zeros({1}), 1, 0);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
}

TEST(Conv2dTest, CountingWindow) {
  const Tensor y = ops::conv2d(Tensor::full({1, 1, 4, 4}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0),
                               Tensor::zeros({1}), 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 9.0);
}

TEST(Conv2dTest, MatchesLoopOracleOnExample) {
  std::mt19937_64 rng(11);
  const auto xv = oracle::random_values(2 * 25, rng);
  const auto wv = oracle::random_values(3 * 2 * 9, rng);
  const auto bv = oracle::random_values(3, rng);
  const Tensor y = ops::conv2d(Tensor::constant({1, 2, 5, 5}, xv), Tensor::constant({3, 2, 3, 3}, wv),
                               Tensor::constant({3}, bv), 1, 0);
  const auto ref = oracle::conv2d(xv, 1, 2, 5, 5, wv, 3, 3, bv, 1, 0);
  EXPECT_LE(oracle::max_abs_diff(y.data(), ref), 1e-12);
}

TEST(Conv2dTest, MatchesLoopOracleOnRandomShapes) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  std::uniform_int_distribution<std::size_t> small(0, 2);
  int checked = 0;
  while (checked < 200) {
    const std::size_t N = dim(rng) % 3 + 1, C = dim(rng), O = dim(rng), H = dim(rng), W = dim(rng);
    const std::size_t K = dim(rng) % 5 + 1, pad = small(rng), stride = small(rng) + 1;
    if (K > H + 2 * pad || K > W + 2 * pad) continue;
    const auto xv = oracle::random_values(N * C * H * W, rng);
    const auto wv = oracle::random_values(O * C * K * K, rng);
    const auto bv = oracle::random_values(O, rng);
    const Tensor y = ops::conv2d(Tensor::constant({N, C, H, W}, xv),
                                 Tensor::constant({O, C, K, K}, wv), Tensor::constant({O}, bv),
                                 stride, pad);
    const auto ref = oracle::conv2d(xv, N, C, H, W, wv, O, K, bv, stride, pad);
    ASSERT_LE(oracle::max_abs_diff(y.data(), ref), 1e-12)
        << "N=" << N << " C=" << C << " O=" << O << " H=" << H << " W=" << W << " K=" << K;
    ++checked;
  }
}

TEST(Conv2dTest, ChannelMismatchThrows) {
  EXPECT_THROW(ops::conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), Tensor(), 1, 0),
               DimensionError);
}

TEST(Conv2dTest, KernelLargerThanInputThrows) {
  EXPECT_THROW(ops::conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), Tensor(), 1, 0),
               DimensionError);
  EXPECT_THROW(ops::conv2d(Tensor::zeros({1, 1, 4, 4}), Tensor::zeros({1, 1, 3, 3}), Tensor(), 0, 0),
               ContractViolation);
}

TEST(DepthwiseConvTest, MatchesPerChannelConv) {
  std::mt19937_64 rng(13);
  const auto xv = oracle::random_values(3 * 5 * 7, rng);
  const auto wv = oracle::random_values(3 * 9, rng);
  const Tensor y = ops::depthwise_conv2d(Tensor::constant({1, 3, 5, 7}, xv),
                                         Tensor::constant({3, 1, 3, 3}, wv), 1);
  for (std::size_t c = 0; c < 3; ++c) {
    const std::span<const double> xc(xv.data() + c * 35, 35);
    const std::span<const double> wc(wv.data() + c * 9, 9);
    const auto ref = oracle::conv2d(xc, 1, 1, 5, 7, wc, 1, 3, {}, 1, 1);
    EXPECT_LE(oracle::max_abs_diff(y.data().subspan(c * 35, 35), ref), 1e-12);
  }
}

TEST(MaxPoolTest, TwoByTwo) {
  const Tensor y = ops::max_pool2d(Tensor::constant({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 4.0);
}

TEST(MaxPoolTest, ConstantStaysConstant) {
  const Tensor y = ops::max_pool2d(Tensor::full({1, 2, 6, 4}, 1.25));
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 1.25);
}

TEST(MaxPoolTest, MatchesScanOracle) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const auto xv = oracle::random_values(36, rng);
    const Tensor y = ops::max_pool2d(Tensor::constant({1, 1, 6, 6}, xv));
    EXPECT_EQ(oracle::max_abs_diff(y.data(), oracle::max_pool2d(xv, 1, 6, 6, 2, 2)), 0.0);
  }
}

TEST(MaxPoolTest, TieRoutesGradientToFirst) {
  const Tensor x = Tensor::parameter({1, 1, 2, 2}, {5, 5, 5, 5});
  const auto g = backward(ops::sum(ops::max_pool2d(x))).of(x);
  EXPECT_EQ(g, (std::vector<double>{1, 0, 0, 0}));
}

TEST(MaxPoolTest, TooSmallThrows) {
  EXPECT_THROW(ops::max_pool2d(Tensor::zeros({1, 1, 1, 4})), DimensionError);
}

TEST(AdaptivePoolTest, IdentityWhenShapesMatch) {
  std::mt19937_64 rng(15);
  const auto xv = oracle::random_values(24, rng);
  const Tensor y = ops::adaptive_avg_pool(Tensor::constant({2, 3, 4}, xv), {2, 3, 4});
  EXPECT_EQ(oracle::max_abs_diff(y.data(), xv), 0.0);
}

TEST(AdaptivePoolTest, ExactHalves) {
  const Tensor y = ops::adaptive_avg_pool(Tensor::constant({4}, {1, 2, 3, 4}), {2});
  EXPECT_EQ(y[0], 1.5);
  EXPECT_EQ(y[1], 3.5);
}

TEST(AdaptivePoolTest, MatchesRegionAverageOracle) {
  std::mt19937_64 rng(16);
  const auto xv = oracle::random_values(8 * 5 * 9, rng);
  const Tensor y = ops::adaptive_avg_pool(Tensor::constant({8, 5, 9}, xv), {3, 2, 4});
  EXPECT_LE(oracle::max_abs_diff(y.data(), oracle::region_average(xv, {8, 5, 9}, {3, 2, 4})),
            1e-12);
}

TEST(AdaptivePoolTest, MatchesOracleOnRandomShapes) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> dim(1, 7);
  for (int t = 0; t < 100; ++t) {
    Shape in{dim(rng), dim(rng), dim(rng)}, out(3);
    for (std::size_t a = 0; a < 3; ++a) out[a] = std::uniform_int_distribution<std::size_t>(1, in[a])(rng);
    const auto xv = oracle::random_values(numel(in), rng);
    const Tensor y = ops::adaptive_avg_pool(Tensor::constant(in, xv), out);
    ASSERT_LE(oracle::max_abs_diff(y.data(), oracle::region_average(xv, in, out)), 1e-12)
        << shape_str(in) << " -> " << shape_str(out);
  }
}

TEST(AdaptivePoolTest, GlobalMeanPreserved) {
  std::mt19937_64 rng(18);
  const auto xv = oracle::random_values(6 * 7 * 5, rng);
  double mean = 0.0;
  for (double v : xv) mean += v;
  mean /= double(xv.size());
  const Tensor y = ops::adaptive_avg_pool(Tensor::constant({6, 7, 5}, xv), {1, 1, 1});
  EXPECT_NEAR(y[0], mean, 1e-12);
}

TEST(AdaptivePoolTest, BadExtentsThrow) {
  EXPECT_THROW(ops::adaptive_avg_pool(Tensor::zeros({4}), {0}), DimensionError);
  EXPECT_THROW(ops::adaptive_avg_pool(Tensor::zeros({4}), {5}), DimensionError);
  EXPECT_THROW(ops::adaptive_avg_pool(Tensor::zeros({4}), {2, 2}), DimensionError);
}

TEST(InstanceNormTest, StandardizedInputPassesThrough) {
  const Tensor x = Tensor::constant({1, 1, 2}, {-1.0, 1.0});
  const Tensor y = ops::instance_norm(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), 1e-12);
  EXPECT_NEAR(y[0], -1.0, 1e-9);
  EXPECT_NEAR(y[1], 1.0, 1e-9);
}

TEST(InstanceNormTest, ConstantChannelGivesShift) {
  const Tensor y = ops::instance_norm(Tensor::full({2, 3, 3}, 4.0), Tensor::constant({2}, {2, 3}),
                                      Tensor::constant({2}, {0.5, -0.25}), 1e-5);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(y[i], 0.5);
  for (std::size_t i = 9; i < 18; ++i) EXPECT_EQ(y[i], -0.25);
}

TEST(InstanceNormTest, RandomInputIsStandardized) {
  std::mt19937_64 rng(19);
  const Tensor y = ops::instance_norm(Tensor::constant({3, 4, 5}, oracle::random_values(60, rng)),
                                      Tensor::full({3}, 1.0), Tensor::zeros({3}), 1e-5);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 20; ++i) mean += y[c * 20 + i] / 20.0;
    for (std::size_t i = 0; i < 20; ++i) var += (y[c * 20 + i] - mean) * (y[c * 20 + i] - mean) / 20.0;
    EXPECT_NEAR(mean, 0.0, 1e-3);
    EXPECT_NEAR(var, 1.0, 1e-3);
  }
}

TEST(InstanceNormTest, BadArgumentsThrow) {
  EXPECT_THROW(ops::instance_norm(Tensor::zeros({2, 2, 2}), Tensor::zeros({3}), Tensor::zeros({3}), 1e-5),
               DimensionError);
  EXPECT_THROW(ops::instance_norm(Tensor::zeros({2, 2, 2}), Tensor::zeros({2}), Tensor::zeros({2}), 0.0),
               ContractViolation);
}

TEST(BatchNormTest, InferWithInitialStatsIsIdentity) {
  std::mt19937_64 rng(20);
  const auto xv = oracle::random_values(2 * 3 * 4, rng);
  ops::RunningStats stats(3);
  const Tensor y = ops::batch_norm_2d(Tensor::constant({1, 3, 2, 4}, xv), stats, 1e-12);
  EXPECT_LE(oracle::max_abs_diff(y.data(), xv), 1e-11);
}

TEST(BatchNormTest, ConstantBatchNormalizesToZero) {
  ops::RunningStats stats(2);
  const Tensor y = ops::batch_norm_2d(Tensor::full({3, 2, 2, 2}, 7.0), stats, ops::NormMode::train,
                                      0.1, 1e-5);
  for (double v : y.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(BatchNormTest, TrainMatchesDirectStatistics) {
  std::mt19937_64 rng(21);
  const std::size_t N = 3, C = 2, M = 6;
  const auto xv = oracle::random_values(N * C * M, rng, -2.0, 3.0);
  ops::RunningStats stats(C);
  const double momentum = 0.1, eps = 1e-5;
  const Tensor y = ops::batch_norm_2d(Tensor::constant({N, C, 2, 3}, xv), stats,
                                      ops::NormMode::train, momentum, eps);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < M; ++i) mean += xv[(n * C + c) * M + i];
    mean /= double(N * M);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < M; ++i) {
        const double d = xv[(n * C + c) * M + i] - mean;
        var += d * d;
      }
    var /= double(N * M);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < M; ++i) {
        const std::size_t k = (n * C + c) * M + i;
        EXPECT_NEAR(y[k], (xv[k] - mean) / std::sqrt(var + eps), 1e-10);
      }
    EXPECT_NEAR(stats.mean[c], momentum * mean, 1e-12);
    EXPECT_NEAR(stats.var[c], (1 - momentum) + momentum * var, 1e-12);
  }
}

TEST(BatchNormTest, SingleValueTrainThrows) {
  ops::RunningStats stats(1);
  EXPECT_THROW(ops::batch_norm_2d(Tensor::zeros({1, 1, 1, 1}), stats, ops::NormMode::train, 0.1, 1e-5),
               ContractViolation);
}

TEST(ElementwiseTest, ReluAndTanh) {
  const Tensor r = ops::relu(Tensor::constant({3}, {-1.0, 2.0, 0.0}));
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 2.0);
  EXPECT_EQ(ops::tanh_act(Tensor::zeros({1}))[0], 0.0);
  const Tensor f = ops::exp_fill({2, 3}, 0.75);
  for (double v : f.data()) EXPECT_EQ(v, 0.75);
}

TEST(ElementwiseTest, ReluSubgradientAtZeroIsZero) {
  const Tensor x = Tensor::parameter({1}, {0.0});
  EXPECT_EQ(backward(ops::sum(ops::relu(x))).of(x)[0], 0.0);
}

TEST(ElementwiseTest, TanhDerivativeMatchesFiniteDifference) {
  const Tensor x = Tensor::parameter({1}, {0.3});
  const double analytic = backward(ops::sum(ops::tanh_act(x))).of(x)[0];
  const double h = 1e-6;
  const double fd = (std::tanh(0.3 + h) - std::tanh(0.3 - h)) / (2 * h);
  EXPECT_LT(std::abs(analytic - fd) / std::abs(fd), 1e-7);
}

TEST(ShapeOpsTest, SliceConcatRoundTrip) {
  std::mt19937_64 rng(22);
  const auto xv = oracle::random_values(5 * 2 * 3, rng);
  const Tensor x = Tensor::constant({5, 2, 3}, xv);
  const Tensor parts[] = {ops::slice(x, 0, 0, 2), ops::slice(x, 0, 2, 5)};
  const Tensor y = ops::concat(parts);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(oracle::max_abs_diff(y.data(), xv), 0.0);
  EXPECT_THROW(ops::slice(x, 3, 0, 1), DimensionError);
  EXPECT_THROW(ops::reshape(x, {7}), DimensionError);
  const Tensor bad[] = {x, Tensor::zeros({1, 3, 3})};
  EXPECT_THROW(ops::concat(bad), DimensionError);
}

// Analytic vs central-difference gradients, 20 random trials per op.
struct GradCase {
  const char* name;
  Shape shape;
  std::function<Tensor(const Tensor&, std::mt19937_64&)> op;
};

class GradientCheckTest : public ::testing::TestWithParam<int> {};

std::vector<GradCase> grad_cases() {
  return {
      {"add", {2, 3}, [](const Tensor& p, auto& rng) {
         return ops::add(p, Tensor::constant({2, 3}, oracle::random_values(6, rng)));
       }},
      {"mul", {2, 3}, [](const Tensor& p, auto&) { return ops::mul(p, p); }},
      {"scale", {4}, [](const Tensor& p, auto&) { return ops::scale(p, -1.7); }},
      {"reshape", {2, 3}, [](const Tensor& p, auto&) { return ops::reshape(p, {3, 2}); }},
      {"slice", {3, 4}, [](const Tensor& p, auto&) { return ops::slice(p, 1, 1, 3); }},
      {"concat", {2, 2}, [](const Tensor& p, auto&) {
         const Tensor parts[] = {p, ops::scale(p, 2.0)};
         return ops::concat(parts);
       }},
      {"relu", {8}, [](const Tensor& p, auto&) { return ops::relu(p); }},
      {"tanh", {8}, [](const Tensor& p, auto&) { return ops::tanh_act(p); }},
      {"conv2d_x", {1, 2, 4, 5}, [](const Tensor& p, auto& rng) {
         return ops::conv2d(p, Tensor::constant({3, 2, 3, 3}, oracle::random_values(54, rng)),
                            Tensor::constant({3}, oracle::random_values(3, rng)), 1, 1);
       }},
      {"conv2d_w", {2, 2, 3, 3}, [](const Tensor& p, auto& rng) {
         return ops::conv2d(Tensor::constant({2, 2, 5, 4}, oracle::random_values(80, rng)), p,
                            Tensor(), 2, 1);
       }},
      {"conv2d_b", {3}, [](const Tensor& p, auto& rng) {
         return ops::conv2d(Tensor::constant({1, 1, 3, 3}, oracle::random_values(9, rng)),
                            Tensor::constant({3, 1, 2, 2}, oracle::random_values(12, rng)), p, 1, 0);
       }},
      {"depthwise_x", {1, 2, 4, 4}, [](const Tensor& p, auto& rng) {
         return ops::depthwise_conv2d(p, Tensor::constant({2, 1, 3, 3}, oracle::random_values(18, rng)), 1);
       }},
      {"depthwise_w", {2, 1, 3, 3}, [](const Tensor& p, auto& rng) {
         return ops::depthwise_conv2d(Tensor::constant({1, 2, 4, 3}, oracle::random_values(24, rng)), p, 1);
       }},
      {"max_pool", {1, 2, 4, 4}, [](const Tensor& p, auto&) { return ops::max_pool2d(p); }},
      {"adaptive_pool", {5, 4, 3}, [](const Tensor& p, auto&) {
         return ops::adaptive_avg_pool(p, {3, 2, 2});
       }},
      {"instance_norm_x", {2, 3, 3}, [](const Tensor& p, auto&) {
         return ops::instance_norm(p, Tensor::constant({2}, {1.3, -0.7}),
                                   Tensor::constant({2}, {0.2, 0.1}), 1e-5);
       }},
      {"instance_norm_scale", {2}, [](const Tensor& p, auto& rng) {
         return ops::instance_norm(Tensor::constant({2, 2, 3}, oracle::random_values(12, rng)), p,
                                   Tensor::zeros({2}), 1e-5);
       }},
      {"instance_norm_shift", {2}, [](const Tensor& p, auto& rng) {
         return ops::instance_norm(Tensor::constant({2, 2, 3}, oracle::random_values(12, rng)),
                                   Tensor::full({2}, 1.0), p, 1e-5);
       }},
      {"batch_norm_train", {2, 2, 2, 3}, [](const Tensor& p, auto&) {
         ops::RunningStats stats(2);
         return ops::batch_norm_2d(p, stats, ops::NormMode::train, 0.1, 1e-5);
       }},
      {"batch_norm_infer", {2, 2, 2, 2}, [](const Tensor& p, auto&) {
         ops::RunningStats stats(2);
         stats.mean = {0.3, -0.2};
         stats.var = {1.5, 0.4};
         return ops::batch_norm_2d(p, std::as_const(stats), 1e-5);
       }},
  };
}

TEST_P(GradientCheckTest, MatchesFiniteDifferences) {
  const auto cases = grad_cases();
  const GradCase& c = cases[static_cast<std::size_t>(GetParam())];
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::mt19937_64 data_rng(1000 + trial);
    const auto values = oracle::random_values(numel(c.shape), data_rng);
    const std::uint64_t op_seed = 2000 + trial;
    const double err = oracle::gradient_check(c.shape, values, [&](const Tensor& p) {
      std::mt19937_64 rng(op_seed);  // same constants for every evaluation
      const Tensor y = c.op(p, rng);
      return project(y, rng);
    });
    ASSERT_LT(err, 1e-5) << c.name << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(Ops, GradientCheckTest, ::testing::Range(0, 20),
                         [](const auto& info) {
                           return std::string(grad_cases()[std::size_t(info.param)].name);
                         });

TEST(GradientCheckTest, ConvReluSumComposition) {
  std::mt19937_64 rng(23);
  const Tensor x = Tensor::constant({1, 2, 5, 5}, oracle::random_values(50, rng));
  const auto w0 = oracle::random_values(3 * 2 * 9, rng);
  const double err = oracle::gradient_check({3, 2, 3, 3}, w0, [&](const Tensor& w) {
    return ops::sum(ops::relu(ops::conv2d(x, w, Tensor(), 1, 1)));
  });
  EXPECT_LT(err, 1e-6);
}

}  // namespace
}  // namespace pcnn
