// Copyright 2026 The featborrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "featborrow/ffb.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "featborrow/init.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"
#include "test_util.hpp"

namespace featborrow {
namespace {

using testing::random_dims;
using testing::random_map;

void zero_combine(BorrowNetParams& params, bool drop_bias) {
  for (auto& lp : params.layers) {
    auto& w = lp.ffb.w_combine;
    std::fill(w.weight.values().begin(), w.weight.values().end(), 0.0);
    if (drop_bias) w.bias.reset();
    else if (w.bias) std::fill(w.bias->begin(), w.bias->end(), 0.0);
  }
}

FfbParams plain_ffb(std::size_t c_deep, std::size_t c_ctx, std::size_t c_n, std::size_t c_common) {
  return FfbParams{0, c_ctx, DeconvWeights(c_deep, c_ctx), ConvWeights1x1::zeros(c_n + c_common + c_ctx, c_n)};
}

TEST(ContextDeconv, ZeroDeeperMapGivesZeroContext) {
  SplitMix64 rng(1);
  FfbParams f = plain_ffb(3, 2, 2, 2);
  for (double& v : f.w_deconv.values()) v = rng.uniform(-1, 1);
  const FeatureMap ctx = context_deconv(FeatureMap(3, 3, 3), f, 5, 6);
  EXPECT_EQ(ctx.h(), 5u);
  EXPECT_EQ(ctx.w(), 6u);
  for (double v : ctx.values()) EXPECT_EQ(v, 0.0);
}

TEST(ContextDeconv, OnesKernelOnSingleCellIsConstant) {
  FfbParams f = plain_ffb(1, 1, 1, 1);
  for (double& v : f.w_deconv.values()) v = 1.0;
  FeatureMap y(1, 1, 1, {2.5});
  const FeatureMap ctx = context_deconv(y, f, 2, 2);
  for (double v : ctx.values()) EXPECT_EQ(v, 2.5);
}

TEST(ContextDeconv, TenToNineteenCrops) {
  SplitMix64 rng(2);
  FfbParams f = plain_ffb(2, 3, 2, 2);
  for (double& v : f.w_deconv.values()) v = rng.uniform(-1, 1);
  const FeatureMap y = random_map(rng, 10, 10, 2);
  const FeatureMap full = oracle::scatter_transposed_conv(y, f.w_deconv);
  ASSERT_EQ(full.h(), 20u);
  const FeatureMap ctx = context_deconv(y, f, 19, 19);
  ASSERT_EQ(ctx.h(), 19u);
  ASSERT_EQ(ctx.w(), 19u);
  // One surplus row/column; it is dropped from the bottom/right.
  for (std::size_t i = 0; i < 19; ++i)
    for (std::size_t j = 0; j < 19; ++j)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(ctx.at(i, j, k), full.at(i, j, k));
}

TEST(ContextDeconv, RatioAboveTwoIsRejected) {
  const FfbParams f = plain_ffb(1, 1, 1, 1);
  try {
    context_deconv(FeatureMap(5, 5, 1), f, 11, 10);
    FAIL() << "expected GeometryError";
  } catch (const GeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported geometry"), std::string::npos);
  }
  EXPECT_THROW(context_deconv(FeatureMap(5, 5, 1), f, 10, 11), GeometryError);
  EXPECT_NO_THROW(context_deconv(FeatureMap(5, 5, 1), f, 10, 10));
}

TEST(FuseLayer, ZeroCombineIsResidualIdentity) {
  SplitMix64 rng(3);
  const FeatureMap x = random_map(rng, 3, 4, 2);
  const BorrowedMap z{random_map(rng, 3, 4, 5)};
  const FeatureMap ctx = random_map(rng, 3, 4, 3);
  const FeatureMap y = fuse_layer(x, z, ctx, plain_ffb(1, 3, 2, 5));
  EXPECT_EQ(y, x);
}

TEST(FuseLayer, BlockWeightsSelectBorrowedSlice) {
  SplitMix64 rng(4);
  const FeatureMap x(2, 3, 3);
  const BorrowedMap z{random_map(rng, 2, 3, 3)};
  const FeatureMap ctx = random_map(rng, 2, 3, 2);
  FfbParams f = plain_ffb(1, 2, 3, 3);
  for (std::size_t k = 0; k < 3; ++k) f.w_combine.weight(3 + k, k) = 1.0;
  EXPECT_EQ(fuse_layer(x, z, ctx, f), z.z);
}

TEST(FuseLayer, ShapeErrors) {
  const FeatureMap x(2, 2, 2);
  EXPECT_THROW(fuse_layer(x, BorrowedMap{FeatureMap(2, 3, 2)}, FeatureMap(2, 2, 2), plain_ffb(1, 2, 2, 2)),
               ShapeError);
  EXPECT_THROW(fuse_layer(x, BorrowedMap{FeatureMap(2, 2, 2)}, FeatureMap(2, 2, 2), plain_ffb(1, 2, 2, 3)),
               ShapeError);
  FfbParams wrong_out{0, 2, DeconvWeights(1, 2), ConvWeights1x1::zeros(6, 3)};
  EXPECT_THROW(fuse_layer(x, BorrowedMap{FeatureMap(2, 2, 2)}, FeatureMap(2, 2, 2), wrong_out), ShapeError);
}

TEST(ForwardPyramid, ZeroCombineReturnsInputBitExact) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dims = random_dims(rng, rng.uniform_int(2, 4));
    const FeaturePyramid p = synthetic_pyramid(dims, rng());
    auto params = make_params(dims, {}, InitMode::kSeededUniform, rng());
    zero_combine(params, trial % 2 == 0);
    const ForwardResult r = forward_pyramid(p, params);
    ASSERT_EQ(r.enhanced.layers.size(), p.size());
    for (std::size_t n = 0; n < p.size(); ++n) EXPECT_EQ(r.enhanced.layers[n], p[n]);
  }
}

TEST(ForwardPyramid, TopLayerAndShapesPreserved) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dims = random_dims(rng, rng.uniform_int(2, 4));
    const FeaturePyramid p = synthetic_pyramid(dims, rng());
    const auto params = make_params(dims, {}, InitMode::kSeededUniform, rng());
    const ForwardResult r = forward_pyramid(p, params);
    EXPECT_EQ(r.enhanced.layers.back(), p[p.size() - 1]);
    EXPECT_EQ(r.matching.size(), p.size() - 1);
    EXPECT_FALSE(r.warning.has_value());
    for (std::size_t n = 0; n < p.size(); ++n) {
      EXPECT_TRUE(r.enhanced.layers[n].same_shape(p[n]));
      for (double v : r.enhanced.layers[n].values()) EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(ForwardPyramid, SingleLayerWarnsAndEchoesInput) {
  SplitMix64 rng(7);
  const FeaturePyramid p({random_map(rng, 3, 3, 2)});
  const ForwardResult r = forward_pyramid(p, BorrowNetParams{});
  ASSERT_TRUE(r.warning.has_value());
  ASSERT_EQ(r.enhanced.layers.size(), 1u);
  EXPECT_EQ(r.enhanced.layers[0], p[0]);
  EXPECT_TRUE(r.matching.empty());
}

TEST(ForwardPyramid, MatchesMonolithicOracle) {
  const std::vector<FeaturePyramid::Dims> dims{{8, 8, 4}, {4, 4, 6}, {2, 2, 8}};
  const FeaturePyramid p = synthetic_pyramid(dims, 7);
  for (InitMode mode : {InitMode::kSeededUniform, InitMode::kIdentity}) {
    const auto params = make_params(dims, {}, mode, 11);
    const ForwardResult r = forward_pyramid(p, params);
    const auto expected = oracle::monolithic_forward(p, params);
    for (std::size_t n = 0; n < dims.size(); ++n)
      EXPECT_LT(oracle::max_abs_diff(r.enhanced.layers[n].values(), expected[n].values()), 1e-9) << "layer " << n;
  }
}

TEST(ForwardPyramid, MatchesMonolithicOracleWithBiasesAndOddSizes) {
  const std::vector<FeaturePyramid::Dims> dims{{7, 5, 3}, {4, 3, 2}, {2, 2, 5}, {1, 1, 4}};
  const FeaturePyramid p = synthetic_pyramid(dims, 3);
  NetworkOptions opts;
  opts.c_common = 3;
  opts.c_ctx = 2;
  opts.embed_bias = opts.value_bias = true;
  const auto params = make_params(dims, opts, InitMode::kSeededUniform, 4);
  const ForwardResult r = forward_pyramid(p, params);
  const auto expected = oracle::monolithic_forward(p, params);
  for (std::size_t n = 0; n < dims.size(); ++n)
    EXPECT_LT(oracle::max_abs_diff(r.enhanced.layers[n].values(), expected[n].values()), 1e-9) << "layer " << n;
}

TEST(ForwardPyramid, CombineWeightsOnlyAffectShallowerLayers) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto dims = random_dims(rng, 4);
    const FeaturePyramid p = synthetic_pyramid(dims, rng());
    const auto params = make_params(dims, {}, InitMode::kSeededUniform, rng());
    const ForwardResult base = forward_pyramid(p, params);
    const std::size_t n = rng.uniform_int(0, params.layers.size() - 1);
    auto bumped = params;
    for (double& v : bumped.layers[n].ffb.w_combine.weight.values()) v += 0.05;
    const ForwardResult r = forward_pyramid(p, bumped);
    for (std::size_t m = n + 1; m < p.size(); ++m) EXPECT_EQ(r.enhanced.layers[m], base.enhanced.layers[m]) << m;
    EXPECT_FALSE(r.enhanced.layers[n] == base.enhanced.layers[n]);
  }
}

TEST(ForwardPyramid, IsDeterministic) {
  const std::vector<FeaturePyramid::Dims> dims{{6, 6, 3}, {3, 3, 4}, {2, 2, 2}};
  const FeaturePyramid p = synthetic_pyramid(dims, 9);
  const auto params = make_params(dims, {}, InitMode::kSeededUniform, 10);
  const ForwardResult a = forward_pyramid(p, params);
  const ForwardResult b = forward_pyramid(p, params);
  for (std::size_t n = 0; n < dims.size(); ++n) EXPECT_EQ(a.enhanced.layers[n], b.enhanced.layers[n]);
}

TEST(BorrowNetParams, ValidationCatchesMismatches) {
  const std::vector<FeaturePyramid::Dims> dims{{4, 4, 3}, {2, 2, 4}};
  const FeaturePyramid p = synthetic_pyramid(dims, 1);
  auto params = make_params(dims, {}, InitMode::kSeededUniform, 2);
  EXPECT_NO_THROW(params.validate(p));

  auto extra = params;
  extra.layers.push_back(extra.layers[0]);
  EXPECT_THROW(forward_pyramid(p, extra), ShapeError);

  auto bad_deconv = params;
  bad_deconv.layers[0].ffb.w_deconv = DeconvWeights(3, 3);
  EXPECT_THROW(forward_pyramid(p, bad_deconv), ShapeError);

  auto bad_combine = params;
  bad_combine.layers[0].ffb.w_combine = ConvWeights1x1::zeros(9, 4);
  EXPECT_THROW(forward_pyramid(p, bad_combine), ShapeError);

  auto bad_index = params;
  bad_index.layers[0].frb.target_layer = 1;
  EXPECT_THROW(forward_pyramid(p, bad_index), ShapeError);
}

}  // namespace
}  // namespace featborrow
