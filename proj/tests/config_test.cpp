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

#include "featborrow/config.hpp"

#include <string>

#include "gtest/gtest.h"

namespace featborrow {
namespace {

const std::string kData = FEATBORROW_TEST_DATA_DIR;

std::string error_of(const std::string& path) {
  try {
    parse_config(path);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const RunConfig c =
      parse_config_json(nlohmann::json::parse(R"({"pyramid": [[8,8,4],[4,4,6],[2,2,8]], "seed": 7})"));
  ASSERT_TRUE(c.pyramid.has_value());
  EXPECT_EQ(c.pyramid->size(), 3u);
  EXPECT_EQ((*c.pyramid)[1].c, 6u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.init, InitMode::kSeededUniform);
  EXPECT_FALSE(c.network.c_common.has_value());
  EXPECT_TRUE(c.network.combine_bias);
  EXPECT_EQ(c.anchors.sizes, (std::vector<double>{32, 64, 128, 256}));
  EXPECT_EQ(c.anchors.aspect_ratios, reference_aspect_ratios());
  EXPECT_EQ(c.anchors.second_sizes.back(), 300.0);
}

TEST(ParseConfig, FullConfig) {
  const RunConfig c = parse_config_json(nlohmann::json::parse(R"({
    "pyramid": [[4,4,3],[2,2,4]], "seed": 3, "init": "identity", "c_common": 5, "c_ctx": 2,
    "embed_bias": true, "value_bias": true, "combine_bias": false,
    "anchors": {"sizes": [20, 40, 80], "aspect_ratios": [1, 2, 0.5], "image_size": 200}})"));
  EXPECT_EQ(c.init, InitMode::kIdentity);
  EXPECT_EQ(c.network.c_common, 5u);
  EXPECT_EQ(c.network.c_ctx, 2u);
  EXPECT_TRUE(c.network.embed_bias);
  EXPECT_FALSE(c.network.combine_bias);
  ASSERT_EQ(c.anchors.second_sizes.size(), 3u);
  EXPECT_NEAR(c.anchors.second_sizes[1], std::sqrt(40.0 * 80.0), 1e-12);
  EXPECT_EQ(c.anchors.second_sizes[2], 200.0);
}

TEST(ParseConfig, RelativePathsResolveAgainstConfigDir) {
  const RunConfig c = parse_config(kData + "/configs/with_paths.json");
  ASSERT_TRUE(c.rf_chain && c.annotations);
  EXPECT_TRUE(std::filesystem::exists(*c.rf_chain)) << *c.rf_chain;
  EXPECT_TRUE(std::filesystem::exists(*c.annotations)) << *c.annotations;
  EXPECT_EQ(load_chain(*c.rf_chain).layers.size(), vgg16_ssd_chain().size());
}

TEST(ParseConfig, ErrorsNameTheProblem) {
  EXPECT_NE(error_of(kData + "/configs/increasing.json").find("resolution must decrease"), std::string::npos);
  EXPECT_NE(error_of(kData + "/configs/bad_anchor_sizes.json").find("strictly increasing"), std::string::npos);
  EXPECT_NE(error_of(kData + "/configs/unknown_key.json").find("sede"), std::string::npos);
  EXPECT_NE(error_of(kData + "/configs/ratio_too_large.json").find("ratio"), std::string::npos);
  EXPECT_NE(error_of(kData + "/configs/bad_init.json").find("init"), std::string::npos);
  EXPECT_THROW(parse_config(kData + "/configs/missing.json"), IoError);
  EXPECT_THROW(parse_config(kData + "/not_json.json"), FormatError);
}

TEST(ParseConfig, FieldValidation) {
  auto bad = [](const char* text) {
    EXPECT_THROW(parse_config_json(nlohmann::json::parse(text)), ValidationError) << text;
  };
  bad(R"([1, 2])");
  bad(R"({"pyramid": []})");
  bad(R"({"pyramid": [[4, 4]]})");
  bad(R"({"pyramid": [[4, 0, 3]]})");
  bad(R"({"seed": -1})");
  bad(R"({"c_common": 0})");
  bad(R"({"embed_bias": 1})");
  bad(R"({"anchors": {"aspect_ratios": [1, 2]}})");
  bad(R"({"anchors": {"sizes": [32, 64], "colour": 1}})");
}

TEST(RunConfig, SeedStreamsAreDistinct) {
  RunConfig c;
  c.seed = 7;
  EXPECT_NE(pyramid_seed(c), params_seed(c));
  EXPECT_NE(params_seed(c), target_seed(c));
  EXPECT_THROW(RunConfig{}.require_pyramid(), ValidationError);
}

TEST(ParseChain, Errors) {
  auto bad = [](const char* text) {
    EXPECT_THROW(parse_chain_json(nlohmann::json::parse(text)), ValidationError) << text;
  };
  bad(R"({"layers": []})");
  bad(R"({"layers": [{"stride": 2}]})");
  bad(R"({"layers": [{"kernel": 3, "dilation": 2}]})");
  bad(R"({"layers": [{"kernel": 3, "padding": -1}]})");
  bad(R"({"input": 300, "layers": [{"kernel": 3}]})");
  const ChainSpec ok = parse_chain_json(nlohmann::json::parse(R"({"layers": [{"kernel": 3}, {"kernel": 2, "stride": 2}]})"));
  EXPECT_EQ(ok.layers[0].name, "layer0");
  EXPECT_EQ(chain_geometry(ok.layers).receptive_field, 4u);
}

}  // namespace
}  // namespace featborrow
