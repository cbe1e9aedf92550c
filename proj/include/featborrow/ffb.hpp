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

// Feature fusion and the top-down pass over the whole pyramid.
//
//   Y_last = X_last
//   Y_n    = X_n + C_n [X_n, Z_n, D_n(Y_{n+1})]     for n = last-1 .. 0
//
// Z_n comes from matching and borrowing against the original deeper maps
// X_{n+1..}; only the context path reads the fused Y_{n+1}.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/fmb.hpp"
#include "featborrow/frb.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

struct FfbParams {
  std::size_t target_layer = 0;
  std::size_t c_ctx = 0;
  DeconvWeights w_deconv;      // c_{n+1} -> c_ctx
  ConvWeights1x1 w_combine;    // (c_n + c_common + c_ctx) -> c_n

  void validate(const FeaturePyramid& p, std::size_t c_common) const {
    const std::size_t n = target_layer;
    if (n + 1 >= p.size()) throw ShapeError("fusion block needs a deeper layer below layer " + std::to_string(n));
    if (w_deconv.c_in() != p[n + 1].c() || w_deconv.c_out() != c_ctx) {
      throw ShapeError("deconv for layer " + std::to_string(n) + " must map " + std::to_string(p[n + 1].c()) +
                       " -> " + std::to_string(c_ctx) + " channels");
    }
    w_combine.validate();
    const std::size_t cin = p[n].c() + c_common + c_ctx;
    if (w_combine.c_in() != cin || w_combine.c_out() != p[n].c()) {
      throw ShapeError("combine layer for layer " + std::to_string(n) + " must be " + std::to_string(cin) + "x" +
                       std::to_string(p[n].c()) + ", got " + w_combine.weight.shape_string());
    }
  }
};

struct LayerParams {
  FmbParams fmb;
  FrbParams frb;
  FfbParams ffb;
};

// layers[n] holds the blocks that enhance pyramid layer n, n = 0..N-2.
struct BorrowNetParams {
  std::vector<LayerParams> layers;

  void validate(const FeaturePyramid& p) const {
    if (layers.size() + 1 != p.size()) {
      throw ShapeError("parameters cover " + std::to_string(layers.size()) + " layers, pyramid needs " +
                       std::to_string(p.size() - 1));
    }
    for (std::size_t n = 0; n < layers.size(); ++n) {
      const auto& lp = layers[n];
      if (lp.fmb.target_layer != n || lp.frb.target_layer != n || lp.ffb.target_layer != n) {
        throw ShapeError("parameter block " + std::to_string(n) + " carries a mismatched target layer");
      }
      lp.fmb.validate(p);
      lp.frb.validate(p);
      lp.ffb.validate(p, lp.frb.c_common);
    }
  }
};

inline FeatureMap context_deconv(const FeatureMap& y_deeper, const FfbParams& params, std::size_t target_h,
                                 std::size_t target_w) {
  if (target_h > 2 * y_deeper.h() || target_w > 2 * y_deeper.w()) {
    throw GeometryError("unsupported geometry: " + std::to_string(y_deeper.h()) + "x" + std::to_string(y_deeper.w()) +
                        " -> " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                        " needs a resolution ratio above 2");
  }
  return transposed_conv(y_deeper, params.w_deconv, target_h, target_w);
}

inline FeatureMap fuse_layer(const FeatureMap& x, const BorrowedMap& z, const FeatureMap& ctx,
                             const FfbParams& params) {
  const FeatureMap merged = concat_channels({x, z.z, ctx});
  if (params.w_combine.c_out() != x.c()) {
    throw ShapeError("combine layer outputs " + std::to_string(params.w_combine.c_out()) + " channels, layer has " +
                     std::to_string(x.c()));
  }
  FeatureMap y = conv1x1(merged, params.w_combine);
  auto out = y.values();
  auto src = x.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += src[k];
  return y;
}

struct ForwardResult {
  EnhancedPyramid enhanced;
  std::vector<MatchingMatrix> matching;  // one per enhanced layer 0..N-2
  std::optional<std::string> warning;
};

inline ForwardResult forward_pyramid(const FeaturePyramid& p, const BorrowNetParams& params) {
  params.validate(p);
  ForwardResult result;
  const std::size_t depth = p.size();
  result.enhanced.layers.assign(p.begin(), p.end());
  if (depth == 1) {
    result.warning = "single-layer pyramid: nothing to borrow from, output equals input";
    return result;
  }
  std::vector<std::optional<MatchingMatrix>> matching(depth - 1);
  for (std::size_t n = depth - 1; n-- > 0;) {
    const LayerParams& lp = params.layers[n];
    const FeatureMap& x = p[n];
    MatchingMatrix s = matching_matrix(p, lp.fmb);
    const BorrowedMap z = borrow(s, encapsulate_and_stack(p, lp.frb), x.h(), x.w());
    const FeatureMap ctx = context_deconv(result.enhanced.layers[n + 1], lp.ffb, x.h(), x.w());
    result.enhanced.layers[n] = fuse_layer(x, z, ctx, lp.ffb);
    matching[n] = std::move(s);
  }
  for (auto& s : matching) result.matching.push_back(std::move(*s));
  return result;
}

}  // namespace featborrow
