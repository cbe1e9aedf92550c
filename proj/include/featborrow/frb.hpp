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

// Feature representing: the borrowed map Z for layer n is the
// matching-weighted average of the encapsulated deeper descriptors.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/fmb.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

struct FrbParams {
  std::size_t target_layer = 0;
  std::size_t c_common = 0;
  std::vector<ConvWeights1x1> w_values;  // one per deeper layer, c_{n'} -> c_common

  void validate(const FeaturePyramid& p) const {
    const std::size_t n = target_layer;
    if (n + 1 >= p.size()) {
      throw ShapeError("no deeper layers below layer " + std::to_string(n) + " of a " + std::to_string(p.size()) +
                       "-layer pyramid");
    }
    if (c_common == 0) throw ShapeError("encapsulation width must be positive");
    if (w_values.size() != p.size() - n - 1) {
      throw ShapeError("expected " + std::to_string(p.size() - n - 1) + " value encapsulations, got " +
                       std::to_string(w_values.size()));
    }
    for (std::size_t k = 0; k < w_values.size(); ++k) {
      w_values[k].validate();
      const std::size_t cin = p[n + 1 + k].c();
      if (w_values[k].c_in() != cin || w_values[k].c_out() != c_common) {
        throw ShapeError("value encapsulation for layer " + std::to_string(n + 1 + k) + " must be " +
                         std::to_string(cin) + "x" + std::to_string(c_common) + ", got " +
                         w_values[k].weight.shape_string());
      }
    }
  }
};

struct BorrowedMap {
  FeatureMap z;
};

inline Matrix encapsulate_and_stack(const FeaturePyramid& p, const FrbParams& params) {
  params.validate(p);
  return stack_deeper(p, params.target_layer, params.w_values, params.c_common);
}

inline BorrowedMap borrow(const MatchingMatrix& s, const Matrix& values, std::size_t h, std::size_t w) {
  if (s.d() != values.rows()) {
    throw ShapeError("matching matrix " + s.values.shape_string() + " does not conform to values " +
                     values.shape_string());
  }
  if (s.m() != h * w) {
    throw ShapeError("matching matrix has " + std::to_string(s.m()) + " rows for a " + std::to_string(h) + "x" +
                     std::to_string(w) + " layer");
  }
  return BorrowedMap{reshape_matrix_to_map(matmul(s.values, values), h, w)};
}

}  // namespace featborrow
