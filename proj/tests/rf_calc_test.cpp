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

#include "featborrow/rf_calc.hpp"

#include <vector>

#include "featborrow/rng.hpp"
#include "gtest/gtest.h"

namespace featborrow {
namespace {

// Plain recurrence kept apart from the library.
std::pair<std::size_t, std::size_t> hand_recurrence(const std::vector<std::pair<std::size_t, std::size_t>>& ks) {
  std::size_t rf = 1, jump = 1;
  for (auto [k, s] : ks) {
    rf = rf + (k - 1) * jump;
    jump = jump * s;
  }
  return {jump, rf};
}

TEST(ChainGeometry, SmallChains) {
  const ChainGeom one = chain_geometry({{"c", 3, 1, 1}});
  EXPECT_EQ(one.receptive_field, 3u);
  EXPECT_EQ(one.stride, 1u);
  const ChainGeom two = chain_geometry({{"a", 3, 1, 1}, {"b", 3, 1, 1}});
  EXPECT_EQ(two.receptive_field, 5u);
  ASSERT_EQ(two.trace.size(), 2u);
  EXPECT_EQ(two.trace[0].receptive_field, 3u);
}

TEST(ChainGeometry, VggThroughConv43) {
  const ChainGeom g = chain_geometry(vgg16_ssd_chain());
  const TraceEntry* e = g.find("conv4_3");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->jump, 8u);
  EXPECT_EQ(e->receptive_field, 92u);
  std::vector<std::pair<std::size_t, std::size_t>> ks{{3, 1}, {3, 1}, {2, 2}, {3, 1}, {3, 1}, {2, 2}, {3, 1},
                                                      {3, 1}, {3, 1}, {2, 2}, {3, 1}, {3, 1}, {3, 1}};
  const auto [jump, rf] = hand_recurrence(ks);
  EXPECT_EQ(jump, 8u);
  EXPECT_EQ(rf, 92u);
}

TEST(ChainGeometry, ReferenceAuditAndGrids) {
  const ChainGeom g = chain_geometry(vgg16_ssd_chain(), 300);
  const auto rows = audit_against_reference(g);
  ASSERT_EQ(rows.size(), 4u);
  const std::size_t strides[] = {8, 16, 32, 64};
  const std::size_t grids[] = {38, 19, 10, 5};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_TRUE(rows[k].stride_matches()) << rows[k].name;
    EXPECT_EQ(rows[k].stride, strides[k]);
    ASSERT_TRUE(rows[k].output_size.has_value());
    EXPECT_EQ(*rows[k].output_size, grids[k]);
  }
  EXPECT_EQ(rows[0].receptive_field, 92u);
  EXPECT_EQ(rows[0].receptive_field_delta(), 92 - 108);
}

TEST(ChainGeometry, CompositionLaw) {
  SplitMix64 rng(1);
  auto random_chain = [&](std::size_t len) {
    std::vector<LayerGeom> c;
    for (std::size_t i = 0; i < len; ++i)
      c.push_back({"l", static_cast<std::size_t>(rng.uniform_int(1, 7)), static_cast<std::size_t>(rng.uniform_int(1, 3)),
                   0, false});
    return c;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_chain(rng.uniform_int(1, 6));
    const auto b = random_chain(rng.uniform_int(1, 6));
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const ChainGeom ga = chain_geometry(a), gb = chain_geometry(b), gab = chain_geometry(ab);
    EXPECT_EQ(gab.stride, ga.stride * gb.stride);
    EXPECT_EQ(gab.receptive_field, ga.receptive_field + (gb.receptive_field - 1) * ga.stride);
    std::size_t prev = 1;
    for (const auto& e : gab.trace) {
      EXPECT_GE(e.receptive_field, prev);
      prev = e.receptive_field;
    }
  }
}

TEST(ChainGeometry, PointwiseLayersKeepReceptiveField) {
  const ChainGeom g = chain_geometry({{"a", 5, 2, 0}, {"p", 1, 1, 0}, {"q", 1, 1, 0}});
  EXPECT_EQ(g.trace[0].receptive_field, g.trace[2].receptive_field);
  EXPECT_EQ(g.trace[0].jump, g.trace[2].jump);
}

TEST(ChainGeometry, PaddingOnlyAffectsOutputSize) {
  const ChainGeom a = chain_geometry({{"c", 3, 2, 0}}, 11);
  const ChainGeom b = chain_geometry({{"c", 3, 2, 1}}, 11);
  EXPECT_EQ(a.receptive_field, b.receptive_field);
  EXPECT_EQ(*a.trace[0].output_size, 5u);
  EXPECT_EQ(*b.trace[0].output_size, 6u);
}

TEST(ChainGeometry, Errors) {
  EXPECT_THROW(chain_geometry({}), ValidationError);
  EXPECT_THROW(chain_geometry({{"bad", 0, 1, 0}}), ValidationError);
  EXPECT_THROW(chain_geometry({{"bad", 3, 0, 0}}), ValidationError);
  EXPECT_THROW(chain_geometry({{"big", 5, 1, 0}}, 3), ValidationError);
}

TEST(ConvOutputSize, CeilModePooling) {
  const LayerGeom pool{"p", 2, 2, 0, true};
  EXPECT_EQ(conv_output_size(75, pool), 38u);
  EXPECT_EQ(conv_output_size(74, pool), 37u);
  EXPECT_EQ(conv_output_size(75, LayerGeom{"p", 2, 2, 0, false}), 37u);
}

}  // namespace
}  // namespace featborrow
