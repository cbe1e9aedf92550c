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

// Feature matching: cosine similarity between the embedded descriptors of
// one layer and every embedded descriptor of all deeper layers, turned
// into a row-stochastic matching matrix by a row softmax.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

struct FmbParams {
  std::size_t target_layer = 0;
  ConvWeights1x1 w_query;              // c_n -> c_n
  std::vector<ConvWeights1x1> w_keys;  // one per deeper layer, c_{n'} -> c_n

  void validate(const FeaturePyramid& p) const {
    const std::size_t n = target_layer;
    if (n + 1 >= p.size()) {
      throw ShapeError("no deeper layers below layer " + std::to_string(n) + " of a " + std::to_string(p.size()) +
                       "-layer pyramid");
    }
    const std::size_t c = p[n].c();
    w_query.validate();
    if (w_query.c_in() != c || w_query.c_out() != c) {
      throw ShapeError("query embedding must be " + std::to_string(c) + "x" + std::to_string(c) + ", got " +
                       w_query.weight.shape_string());
    }
    if (w_keys.size() != p.size() - n - 1) {
      throw ShapeError("expected " + std::to_string(p.size() - n - 1) + " key embeddings, got " +
                       std::to_string(w_keys.size()));
    }
    for (std::size_t k = 0; k < w_keys.size(); ++k) {
      w_keys[k].validate();
      const std::size_t cin = p[n + 1 + k].c();
      if (w_keys[k].c_in() != cin || w_keys[k].c_out() != c) {
        throw ShapeError("key embedding for layer " + std::to_string(n + 1 + k) + " must be " + std::to_string(cin) +
                         "x" + std::to_string(c) + ", got " + w_keys[k].weight.shape_string());
      }
    }
  }
};

// Row-stochastic m_n x d_n matrix.
struct MatchingMatrix {
  Matrix values;

  std::size_t m() const noexcept { return values.rows(); }
  std::size_t d() const noexcept { return values.cols(); }
};

// Applies one 1x1 conv per deeper layer and stacks the flattened results
// along rows, layer order n+1..N, row-major within a layer.
inline Matrix stack_deeper(const FeaturePyramid& p, std::size_t n, const std::vector<ConvWeights1x1>& weights,
                           std::size_t c_out) {
  const std::size_t d = p.deeper_cells(n);
  Matrix out(d, c_out);
  std::size_t row = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const FeatureMap projected = conv1x1(p[n + 1 + k], weights[k]);
    const auto src = projected.values();
    std::copy(src.begin(), src.end(), out.values().begin() + static_cast<std::ptrdiff_t>(row * c_out));
    row += projected.cells();
  }
  return out;
}

inline Matrix embed_query(const FeaturePyramid& p, const FmbParams& params) {
  params.validate(p);
  return reshape_map_to_matrix(conv1x1(p[params.target_layer], params.w_query));
}

inline Matrix embed_and_stack_keys(const FeaturePyramid& p, const FmbParams& params) {
  params.validate(p);
  return stack_deeper(p, params.target_layer, params.w_keys, p[params.target_layer].c());
}

// Cosine similarity of every query row against every key row.
inline Matrix similarity_matrix(const Matrix& query, const Matrix& keys) {
  if (query.cols() != keys.cols()) {
    throw ShapeError("similarity needs equal descriptor width: query " + query.shape_string() + ", keys " +
                     keys.shape_string());
  }
  return matmul_transposed(l2_normalize_rows(query), l2_normalize_rows(keys));
}

inline MatchingMatrix matching_matrix(const FeaturePyramid& p, const FmbParams& params) {
  const Matrix query = embed_query(p, params);
  const Matrix keys = embed_and_stack_keys(p, params);
  return MatchingMatrix{row_softmax(similarity_matrix(query, keys))};
}

}  // namespace featborrow
