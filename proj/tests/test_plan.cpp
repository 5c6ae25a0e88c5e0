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

#include <random>
#include <vector>

#include "puppetcnn/errors.hpp"
#include "puppetcnn/plan.hpp"

namespace pcnn {
namespace {

TEST(PlanLayersTest, DefaultTemplateDepthOne) {
  const PuppetTemplate tmpl;  // 64, 128, 256, 512; RGB; 10 classes
  const auto plan = plan_layers(tmpl, 1);
  ASSERT_EQ(plan.specs.size(), 5u);
  EXPECT_EQ(plan.specs[0], (LayerSpec{3, 64, 3, LayerRole::conv}));
  EXPECT_EQ(plan.specs[1], (LayerSpec{64, 128, 3, LayerRole::conv}));
  EXPECT_EQ(plan.specs[2], (LayerSpec{128, 256, 3, LayerRole::conv}));
  EXPECT_EQ(plan.specs[3], (LayerSpec{256, 512, 3, LayerRole::conv}));
  EXPECT_EQ(plan.specs[4], (LayerSpec{512, 10, 1, LayerRole::head}));
  EXPECT_EQ(plan.pool_after, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(plan.conv_count(), 4u);
}

TEST(PlanLayersTest, DepthTwoSmallTemplate) {
  PuppetTemplate tmpl;
  tmpl.channels = {8, 16};
  tmpl.in_channels = 1;
  const auto plan = plan_layers(tmpl, 2);
  const std::vector<LayerSpec> want{{1, 8, 3, LayerRole::conv},
                                    {8, 8, 3, LayerRole::conv},
                                    {8, 16, 3, LayerRole::conv},
                                    {16, 16, 3, LayerRole::conv},
                                    {16, 10, 1, LayerRole::head}};
  EXPECT_EQ(plan.specs, want);
  EXPECT_EQ(plan.pool_after, (std::vector<std::size_t>{1, 3}));
  EXPECT_TRUE(plan.pools_after(1));
  EXPECT_FALSE(plan.pools_after(2));
}

TEST(PlanLayersTest, SpecCountIsDepthTimesStagesPlusHead) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> dd(1, 10), nc(1, 5);
  for (int t = 0; t < 50; ++t) {
    PuppetTemplate tmpl;
    tmpl.channels.clear();
    const std::size_t stages = nc(rng);
    for (std::size_t s = 0; s < stages; ++s) tmpl.channels.push_back(4 * (s + 1));
    const std::size_t d = dd(rng);
    const auto plan = plan_layers(tmpl, d);
    EXPECT_EQ(plan.specs.size(), d * stages + 1);
    EXPECT_EQ(plan.specs.back().role, LayerRole::head);
  }
}

TEST(PlanLayersTest, InvalidInputsThrow) {
  PuppetTemplate tmpl;
  EXPECT_THROW(plan_layers(tmpl, 0), ContractViolation);
  tmpl.channels = {8, 8};
  EXPECT_THROW(plan_layers(tmpl, 1), ContractViolation);
  tmpl.channels = {};
  EXPECT_THROW(plan_layers(tmpl, 1), ContractViolation);
  tmpl.channels = {8};
  tmpl.kernel = 2;
  EXPECT_THROW(plan_layers(tmpl, 1), ContractViolation);
}

TEST(PlanLayersTest, MaxChannelsIncludeHeadAndInput) {
  PuppetTemplate tmpl;
  tmpl.channels = {4, 6};
  tmpl.num_classes = 9;
  tmpl.in_channels = 3;
  EXPECT_EQ(tmpl.max_out_channels(), 9u);
  EXPECT_EQ(tmpl.max_in_channels(), 6u);
}

TEST(GeneratedParamsTest, HandCountChannelsFourEightDepthTwo) {
  PuppetTemplate tmpl;
  tmpl.channels = {4, 8};
  tmpl.in_channels = 3;
  // 4*(3*9+1) + 4*(4*9+1) + 8*(4*9+1) + 8*(8*9+1) + 10*(8+1)
  const std::size_t want = 112 + 148 + 296 + 584 + 90;
  EXPECT_EQ(generated_param_count(plan_layers(tmpl, 2)), want);
}

TEST(MultAddsTest, SingleConvExample) {
  // One 3x3 conv, C_in=2, C_out=4, 8x8 output, no head.
  const PlannedNetwork plan{{{2, 4, 3, LayerRole::conv}}, {}, 1};
  EXPECT_EQ(plan_multadds(plan, 8, 8), 4608u);
}

TEST(MultAddsTest, LinearInDepth) {
  PuppetTemplate tmpl;
  tmpl.channels = {8, 16, 32};
  tmpl.in_channels = 1;
  tmpl.num_classes = 4;
  const auto m = [&](std::size_t d) { return plan_multadds(plan_layers(tmpl, d), 16, 16); };
  const std::size_t step = m(2) - m(1);
  EXPECT_GT(step, 0u);
  for (std::size_t d = 2; d <= 12; ++d) EXPECT_EQ(m(d + 1) - m(d), step);
}

TEST(MultAddsTest, PoolingStopsBelowTwo) {
  PuppetTemplate tmpl;
  tmpl.channels = {2, 3, 4};
  tmpl.in_channels = 1;
  tmpl.num_classes = 2;
  // 2x2 -> 1x1 after stage 0; later stages stay at 1x1.
  const std::size_t want = 2 * 4 * 1 * 9 + 3 * 1 * 2 * 9 + 4 * 1 * 3 * 9 + 2 * 4;
  EXPECT_EQ(plan_multadds(plan_layers(tmpl, 1), 2, 2), want);
}

TEST(TemplateTest, TopologyNamesRoundTrip) {
  EXPECT_EQ(topology_from_string(to_string(Topology::plain)), Topology::plain);
  EXPECT_EQ(topology_from_string(to_string(Topology::residual)), Topology::residual);
  EXPECT_THROW(topology_from_string("dense"), ContractViolation);
}

TEST(TemplateTest, ScaledChannels) {
  EXPECT_EQ(scaled_channels(0.125), (std::vector<std::size_t>{8, 16, 32, 64}));
  EXPECT_THROW(scaled_channels(0.0), ContractViolation);
}

}  // namespace
}  // namespace pcnn
