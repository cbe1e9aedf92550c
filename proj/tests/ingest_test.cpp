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

#include "featborrow/ingest.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "featborrow/rng.hpp"
#include "gtest/gtest.h"

namespace featborrow {
namespace {

const std::string kData = FEATBORROW_TEST_DATA_DIR;

double percentile_of(const ArStats& s, double p) {
  for (const auto& [q, v] : s.percentiles)
    if (q == p) return v;
  ADD_FAILURE() << "percentile " << p << " missing";
  return -1.0;
}

// Independent nearest-rank oracle: walk the sorted sample until at least
// p percent of it lies at or below the current value.
double sort_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  for (std::size_t k = 0; k < v.size(); ++k)
    if (100.0 * static_cast<double>(k + 1) >= p * static_cast<double>(v.size())) return v[k];
  return v.back();
}

AnnotationSet from_boxes(const std::vector<std::pair<double, double>>& boxes) {
  AnnotationSet s;
  for (auto [w, h] : boxes) s.objects.push_back({1, 1, w, h});
  return s;
}

TEST(LoadAnnotations, ThreeBoxes) {
  const AnnotationSet s = load_annotations(kData + "/three_boxes.json");
  ASSERT_EQ(s.objects.size(), 3u);
  EXPECT_EQ(s.skipped, 0u);
  EXPECT_EQ(s.objects[1].width, 30.0);
  EXPECT_EQ(s.objects[1].height, 10.0);
  const ArStats st = ar_stats(s);
  EXPECT_EQ(percentile_of(st, 100), 3.0);
  EXPECT_EQ(percentile_of(st, 50), 3.0);
}

TEST(LoadAnnotations, ZeroWidthBoxIsSkipped) {
  const AnnotationSet s = load_annotations(kData + "/one_zero_width.json");
  EXPECT_EQ(s.objects.size(), 2u);
  EXPECT_EQ(s.skipped, 1u);
}

TEST(LoadAnnotations, EmptyArrayIsNotAnError) {
  const AnnotationSet s = load_annotations(kData + "/empty_annotations.json");
  EXPECT_TRUE(s.objects.empty());
  EXPECT_EQ(s.skipped, 0u);
  EXPECT_THROW(ar_stats(s), DomainError);
}

TEST(LoadAnnotations, Errors) {
  try {
    load_annotations(kData + "/no_annotations_key.json");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("annotations"), std::string::npos);
  }
  EXPECT_THROW(load_annotations(kData + "/not_json.json"), FormatError);
  EXPECT_THROW(load_annotations(kData + "/does_not_exist.json"), IoError);
}

TEST(LoadAnnotations, CategoryFilter) {
  const AnnotationSet all = load_annotations(kData + "/ar_fixture.json");
  EXPECT_EQ(all.objects.size(), 10u);
  EXPECT_EQ(all.skipped, 2u);
  const AnnotationSet cat1 = load_annotations(kData + "/ar_fixture.json", 1);
  EXPECT_EQ(cat1.objects.size(), 9u);
  EXPECT_EQ(cat1.skipped, 1u);
  EXPECT_EQ(ar_stats(cat1).percentiles.back().second, 6.0);
}

TEST(ArStats, SyntheticFixturePercentiles) {
  const ArStats s = ar_stats(load_annotations(kData + "/ar_fixture.json"), {10, 25, 50, 90, 95, 99, 100});
  EXPECT_EQ(s.count, 10u);
  EXPECT_EQ(percentile_of(s, 10), 1.0);
  EXPECT_EQ(percentile_of(s, 25), 1.5);
  EXPECT_EQ(percentile_of(s, 50), 2.0);
  EXPECT_EQ(percentile_of(s, 90), 6.0);
  EXPECT_EQ(percentile_of(s, 95), 8.0);
  EXPECT_EQ(percentile_of(s, 99), 8.0);
  EXPECT_EQ(percentile_of(s, 100), 8.0);
}

TEST(ArStats, SquareBoxesGiveOne) {
  const ArStats s = ar_stats(from_boxes({{5, 5}, {9, 9}, {100, 100}}));
  for (const auto& [p, v] : s.percentiles) EXPECT_EQ(v, 1.0) << p;
}

TEST(ArStats, OutlierAgainstSortOracle) {
  std::vector<std::pair<double, double>> boxes;
  std::vector<double> ars;
  SplitMix64 rng(3);
  for (int k = 0; k < 99; ++k) {
    const double ar = 1.0 + 0.05 * static_cast<double>(rng.uniform_int(0, 40));
    const bool tall = rng.uniform01() < 0.5;
    boxes.emplace_back(tall ? 10.0 : 10.0 * ar, tall ? 10.0 * ar : 10.0);
    ars.push_back(boxes.back().first / boxes.back().second);
  }
  boxes.emplace_back(80.0, 10.0);
  for (auto& a : ars) a = std::max(a, 1.0 / a);
  ars.push_back(8.0);
  const std::vector<double> ps{1, 10, 50, 90, 98, 99, 99.5, 100};
  const ArStats s = ar_stats(from_boxes(boxes), ps);
  for (double p : ps) EXPECT_DOUBLE_EQ(percentile_of(s, p), sort_oracle(ars, p)) << p;
  EXPECT_LT(percentile_of(s, 99), 8.0);
  EXPECT_EQ(percentile_of(s, 99.5), 8.0);
}

TEST(ArStats, OrderIndependentAndMonotone) {
  std::vector<std::pair<double, double>> boxes{{3, 7}, {12, 4}, {5, 5}, {9, 2}, {1, 6}, {40, 20}, {8, 16}};
  const ArStats a = ar_stats(from_boxes(boxes), {99, 10, 50, 50, 75});
  std::reverse(boxes.begin(), boxes.end());
  const ArStats b = ar_stats(from_boxes(boxes), {10, 50, 75, 99});
  ASSERT_EQ(a.percentiles, b.percentiles);
  for (std::size_t k = 1; k < a.percentiles.size(); ++k) {
    EXPECT_LT(a.percentiles[k - 1].first, a.percentiles[k].first);
    EXPECT_LE(a.percentiles[k - 1].second, a.percentiles[k].second);
  }
  for (const auto& [p, v] : a.percentiles) EXPECT_GE(v, 1.0);
}

TEST(ArStats, ScaleHistogram) {
  const ArStats s = ar_stats(from_boxes({{10, 10}, {14, 14}, {20, 20}, {40, 40}}));
  ASSERT_FALSE(s.scale_histogram.empty());
  EXPECT_EQ(s.scale_histogram.front().lo, 10.0);
  std::size_t total = 0;
  for (const auto& b : s.scale_histogram) {
    EXPECT_NEAR(b.hi / b.lo, std::sqrt(2.0), 1e-12);
    total += b.count;
  }
  EXPECT_EQ(total, 4u);
  EXPECT_EQ(s.scale_histogram[0].count, 2u);
  EXPECT_GT(s.scale_histogram.back().hi, 40.0);
}

TEST(NearestRank, Errors) {
  EXPECT_THROW(nearest_rank({}, 50), DomainError);
  EXPECT_THROW(nearest_rank({1.0}, 0), DomainError);
  EXPECT_THROW(nearest_rank({1.0}, 101), DomainError);
}

}  // namespace
}  // namespace featborrow
