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

// Run configuration (JSON) and layer-chain files.
//
// Config keys, all optional unless a subcommand needs them:
//   pyramid       [[h, w, c], ...] shallow to deep
//   seed          unsigned integer, default 0
//   init          "seeded-uniform" | "identity" | "zeros"
//   c_common      FRB encapsulation width (default: c of the target layer)
//   c_ctx         FFB context width (default: c of the target layer)
//   embed_bias    bool, default false
//   value_bias    bool, default false
//   combine_bias  bool, default true
//   anchors       {sizes, second_sizes, aspect_ratios, image_size}
//   rf_chain      path to a layer-chain file
//   annotations   path to a COCO-style annotation file
//   out           output directory
// Relative paths are resolved against the config file's directory.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featborrow/anchors.hpp"
#include "featborrow/error.hpp"
#include "featborrow/init.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/rf_calc.hpp"

namespace featborrow {

struct RunConfig {
  std::optional<std::vector<FeaturePyramid::Dims>> pyramid;
  std::uint64_t seed = 0;
  InitMode init = InitMode::kSeededUniform;
  NetworkOptions network;
  AnchorSpec anchors = reference_anchor_spec();
  std::optional<std::string> rf_chain;
  std::optional<std::string> annotations;
  std::optional<std::string> out;

  const std::vector<FeaturePyramid::Dims>& require_pyramid() const {
    if (!pyramid) throw ValidationError("config: \"pyramid\" is required for this command");
    return *pyramid;
  }
};

// Seeds of the synthetic pyramid, the parameters and the gradient-check
// target are all derived from RunConfig::seed.
inline std::uint64_t pyramid_seed(const RunConfig& c) { return derive_seed(c.seed, 1); }
inline std::uint64_t params_seed(const RunConfig& c) { return derive_seed(c.seed, 2); }
inline std::uint64_t target_seed(const RunConfig& c) { return derive_seed(c.seed, 3); }

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ValidationError(where + ": unknown key \"" + key + "\"");
  }
}

inline std::size_t positive_count(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw ValidationError(field + ": must be a positive integer");
  }
  return v.get<std::size_t>();
}

inline bool flag(const nlohmann::json& v, const std::string& field) {
  if (!v.is_boolean()) throw ValidationError(field + ": must be true or false");
  return v.get<bool>();
}

inline std::vector<double> number_list(const nlohmann::json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field + ": must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError(field + ": must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::string resolve(const std::filesystem::path& base, const nlohmann::json& v, const std::string& field) {
  if (!v.is_string()) throw ValidationError(field + ": must be a path string");
  std::filesystem::path p = v.get<std::string>();
  return (p.is_relative() ? base / p : p).lexically_normal().string();
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace detail

inline AnchorSpec parse_anchor_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("anchors: must be an object");
  detail::reject_unknown_keys(j, {"sizes", "second_sizes", "aspect_ratios", "image_size"}, "anchors");
  AnchorSpec spec = reference_anchor_spec();
  if (j.contains("aspect_ratios")) spec.aspect_ratios = detail::number_list(j["aspect_ratios"], "anchors.aspect_ratios");
  if (j.contains("image_size")) {
    if (!j["image_size"].is_number()) throw ValidationError("anchors.image_size: must be a number");
    spec.image_size = j["image_size"].get<double>();
  }
  if (j.contains("sizes")) {
    spec.sizes = detail::number_list(j["sizes"], "anchors.sizes");
    AnchorSpec check{spec.sizes, {}, spec.aspect_ratios, spec.image_size};
    check.validate();
    spec.second_sizes = spec.sizes.size() >= 2 ? design_scales(spec.sizes, spec.image_size, spec.aspect_ratios).second_sizes
                                               : std::vector<double>{};
  } else if (j.contains("image_size")) {
    spec.second_sizes = design_scales(spec.sizes, spec.image_size, spec.aspect_ratios).second_sizes;
  }
  if (j.contains("second_sizes")) spec.second_sizes = detail::number_list(j["second_sizes"], "anchors.second_sizes");
  spec.validate();
  return spec;
}

inline RunConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"pyramid", "seed", "init", "c_common", "c_ctx", "embed_bias", "value_bias",
                               "combine_bias", "anchors", "rf_chain", "annotations", "out"},
                              "config");
  RunConfig cfg;
  if (j.contains("pyramid")) {
    const auto& py = j["pyramid"];
    if (!py.is_array() || py.empty()) throw ValidationError("pyramid: must be a non-empty array of [h, w, c]");
    std::vector<FeaturePyramid::Dims> dims;
    for (std::size_t n = 0; n < py.size(); ++n) {
      const std::string field = "pyramid[" + std::to_string(n) + "]";
      if (!py[n].is_array() || py[n].size() != 3) throw ValidationError(field + ": must be [h, w, c]");
      dims.push_back({detail::positive_count(py[n][0], field + ".h"), detail::positive_count(py[n][1], field + ".w"),
                      detail::positive_count(py[n][2], field + ".c")});
    }
    FeaturePyramid::check_dims(dims);
    for (std::size_t n = 0; n + 1 < dims.size(); ++n) {
      if (dims[n].h > 2 * dims[n + 1].h || dims[n].w > 2 * dims[n + 1].w) {
        throw ValidationError("pyramid[" + std::to_string(n) +
                              "]: resolution more than twice the next layer's; the context deconvolution supports a "
                              "ratio of at most 2");
      }
    }
    cfg.pyramid = std::move(dims);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed: must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("init")) {
    const auto mode = j["init"].is_string() ? parse_init_mode(j["init"].get<std::string>()) : std::nullopt;
    if (!mode) throw ValidationError("init: must be one of \"seeded-uniform\", \"identity\", \"zeros\"");
    cfg.init = *mode;
  }
  if (j.contains("c_common")) cfg.network.c_common = detail::positive_count(j["c_common"], "c_common");
  if (j.contains("c_ctx")) cfg.network.c_ctx = detail::positive_count(j["c_ctx"], "c_ctx");
  if (j.contains("embed_bias")) cfg.network.embed_bias = detail::flag(j["embed_bias"], "embed_bias");
  if (j.contains("value_bias")) cfg.network.value_bias = detail::flag(j["value_bias"], "value_bias");
  if (j.contains("combine_bias")) cfg.network.combine_bias = detail::flag(j["combine_bias"], "combine_bias");
  if (j.contains("anchors")) cfg.anchors = parse_anchor_spec(j["anchors"]);
  if (j.contains("rf_chain")) cfg.rf_chain = detail::resolve(base_dir, j["rf_chain"], "rf_chain");
  if (j.contains("annotations")) cfg.annotations = detail::resolve(base_dir, j["annotations"], "annotations");
  if (j.contains("out")) cfg.out = detail::resolve(base_dir, j["out"], "out");
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  return parse_config_json(detail::read_json(path), std::filesystem::path(path).parent_path());
}

// {"input_size": 300, "layers": [{"name", "kernel", "stride", "padding", "ceil_mode"}, ...]}
struct ChainSpec {
  std::vector<LayerGeom> layers;
  std::optional<std::size_t> input_size;
};

inline ChainSpec parse_chain_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("chain: top level must be an object");
  detail::reject_unknown_keys(j, {"input_size", "layers"}, "chain");
  ChainSpec spec;
  if (j.contains("input_size")) spec.input_size = detail::positive_count(j["input_size"], "chain.input_size");
  if (!j.contains("layers") || !j["layers"].is_array()) throw ValidationError("chain.layers: must be an array");
  for (std::size_t k = 0; k < j["layers"].size(); ++k) {
    const auto& l = j["layers"][k];
    const std::string field = "chain.layers[" + std::to_string(k) + "]";
    if (!l.is_object()) throw ValidationError(field + ": must be an object");
    detail::reject_unknown_keys(l, {"name", "kernel", "stride", "padding", "ceil_mode"}, field);
    LayerGeom g;
    g.name = l.contains("name") && l["name"].is_string() ? l["name"].get<std::string>() : "layer" + std::to_string(k);
    if (!l.contains("kernel")) throw ValidationError(field + ".kernel: required");
    g.kernel = detail::positive_count(l["kernel"], field + ".kernel");
    if (l.contains("stride")) g.stride = detail::positive_count(l["stride"], field + ".stride");
    if (l.contains("padding")) {
      if (!l["padding"].is_number_unsigned()) throw ValidationError(field + ".padding: must be >= 0");
      g.padding = l["padding"].get<std::size_t>();
    }
    if (l.contains("ceil_mode")) g.ceil_mode = detail::flag(l["ceil_mode"], field + ".ceil_mode");
    spec.layers.push_back(std::move(g));
  }
  if (spec.layers.empty()) throw ValidationError("chain.layers: must not be empty");
  return spec;
}

inline ChainSpec load_chain(const std::string& path) { return parse_chain_json(detail::read_json(path)); }

}  // namespace featborrow
