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

// Parameter construction for a whole borrowing network, seeded synthetic
// pyramids, and a visitor over every learnable tensor.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/ffb.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/rng.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

enum class InitMode {
  kSeededUniform,  // every weight and bias uniform in [-kInitRange, kInitRange]
  kIdentity,       // embeddings and encapsulations are (rectangular) identities; deconv and combine seeded
  kZeros,          // all weights and biases zero, so the network is the identity map
};

inline constexpr double kInitRange = 0.1;

inline std::optional<InitMode> parse_init_mode(std::string_view s) {
  if (s == "seeded-uniform") return InitMode::kSeededUniform;
  if (s == "identity") return InitMode::kIdentity;
  if (s == "zeros") return InitMode::kZeros;
  return std::nullopt;
}

inline std::string_view to_string(InitMode m) {
  switch (m) {
    case InitMode::kSeededUniform: return "seeded-uniform";
    case InitMode::kIdentity: return "identity";
    case InitMode::kZeros: return "zeros";
  }
  return "?";
}

struct NetworkOptions {
  std::optional<std::size_t> c_common;  // defaults to c_n of the target layer
  std::optional<std::size_t> c_ctx;     // defaults to c_n of the target layer
  bool embed_bias = false;
  bool value_bias = false;
  bool combine_bias = true;
};

namespace detail {

inline void fill_uniform(std::span<double> v, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (double& x : v) x = rng.uniform(-kInitRange, kInitRange);
}

// Each tensor gets its own stream keyed by (layer, slot) so that adding a
// layer does not reshuffle the weights of the others.
inline std::uint64_t tensor_seed(std::uint64_t seed, std::size_t layer, std::size_t slot) {
  return derive_seed(seed, (static_cast<std::uint64_t>(layer) << 16) | slot);
}

inline ConvWeights1x1 make_conv(std::size_t c_in, std::size_t c_out, bool bias, bool identity, InitMode mode,
                                std::uint64_t seed) {
  if (mode == InitMode::kZeros) return ConvWeights1x1::zeros(c_in, c_out, bias);
  if (identity) return ConvWeights1x1::identity(c_in, c_out, bias);
  ConvWeights1x1 w = ConvWeights1x1::zeros(c_in, c_out, bias);
  fill_uniform(w.weight.values(), seed);
  if (w.bias) fill_uniform(*w.bias, derive_seed(seed, 1));
  return w;
}

}  // namespace detail

inline BorrowNetParams make_params(const std::vector<FeaturePyramid::Dims>& dims, const NetworkOptions& opts,
                                   InitMode mode, std::uint64_t seed) {
  FeaturePyramid::check_dims(dims);
  BorrowNetParams params;
  const bool ident = mode == InitMode::kIdentity;
  for (std::size_t n = 0; n + 1 < dims.size(); ++n) {
    const std::size_t c = dims[n].c;
    const std::size_t c_common = opts.c_common.value_or(c);
    const std::size_t c_ctx = opts.c_ctx.value_or(c);
    if (c_common == 0 || c_ctx == 0) throw ValidationError("c_common and c_ctx must be positive");

    std::size_t slot = 0;
    FmbParams fmb{n, detail::make_conv(c, c, opts.embed_bias, ident, mode, detail::tensor_seed(seed, n, slot++)), {}};
    FrbParams frb{n, c_common, {}};
    for (std::size_t k = n + 1; k < dims.size(); ++k) {
      fmb.w_keys.push_back(
          detail::make_conv(dims[k].c, c, opts.embed_bias, ident, mode, detail::tensor_seed(seed, n, slot++)));
      frb.w_values.push_back(
          detail::make_conv(dims[k].c, c_common, opts.value_bias, ident, mode, detail::tensor_seed(seed, n, slot++)));
    }
    DeconvWeights deconv(dims[n + 1].c, c_ctx);
    if (mode != InitMode::kZeros) detail::fill_uniform(deconv.values(), detail::tensor_seed(seed, n, 1000));
    FfbParams ffb{n, c_ctx, std::move(deconv),
                  detail::make_conv(c + c_common + c_ctx, c, opts.combine_bias, false, mode,
                                    detail::tensor_seed(seed, n, 1001))};
    params.layers.push_back(LayerParams{std::move(fmb), std::move(frb), std::move(ffb)});
  }
  return params;
}

// Feature values uniform in [-1, 1], one stream per layer.
inline FeaturePyramid synthetic_pyramid(const std::vector<FeaturePyramid::Dims>& dims, std::uint64_t seed) {
  FeaturePyramid::check_dims(dims);
  std::vector<FeatureMap> layers;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    FeatureMap x(dims[n].h, dims[n].w, dims[n].c);
    SplitMix64 rng(derive_seed(seed, 0xFEA7000 + n));
    for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
    layers.push_back(std::move(x));
  }
  return FeaturePyramid(std::move(layers));
}

// Parameter group names, as reported by gradient checks.
namespace group {
inline constexpr std::string_view kQuery = "query_embedding";
inline constexpr std::string_view kQueryBias = "query_embedding_bias";
inline constexpr std::string_view kKey = "key_embedding";
inline constexpr std::string_view kKeyBias = "key_embedding_bias";
inline constexpr std::string_view kValue = "value_encapsulation";
inline constexpr std::string_view kValueBias = "value_encapsulation_bias";
inline constexpr std::string_view kCombine = "combine_weight";
inline constexpr std::string_view kCombineBias = "combine_bias";
inline constexpr std::string_view kDeconv = "deconv_kernel";
}  // namespace group

// Calls fn(group, layer, tensor_values) for every learnable tensor, in a
// fixed order. Works on const and non-const params.
template <typename Params, typename Fn>
  requires std::is_same_v<std::remove_const_t<Params>, BorrowNetParams>
void for_each_param_tensor(Params& params, Fn&& fn) {
  auto visit_conv = [&](std::string_view wname, std::string_view bname, std::size_t n, auto& conv) {
    fn(wname, n, conv.weight.values());
    if (conv.bias) fn(bname, n, std::span(*conv.bias));
  };
  for (std::size_t n = 0; n < params.layers.size(); ++n) {
    auto& lp = params.layers[n];
    visit_conv(group::kQuery, group::kQueryBias, n, lp.fmb.w_query);
    for (auto& k : lp.fmb.w_keys) visit_conv(group::kKey, group::kKeyBias, n, k);
    for (auto& v : lp.frb.w_values) visit_conv(group::kValue, group::kValueBias, n, v);
    fn(group::kDeconv, n, lp.ffb.w_deconv.values());
    visit_conv(group::kCombine, group::kCombineBias, n, lp.ffb.w_combine);
  }
}

inline std::size_t param_count(const BorrowNetParams& params) {
  std::size_t total = 0;
  for_each_param_tensor(params, [&](std::string_view, std::size_t, auto values) { total += values.size(); });
  return total;
}

}  // namespace featborrow
