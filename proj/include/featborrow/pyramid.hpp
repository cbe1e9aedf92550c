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

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

// Ordered detection-layer maps, shallow (index 0) to deep. Spatial size
// never grows with depth and shrinks in at least one axis per step;
// channel counts are free.
class FeaturePyramid {
 public:
  explicit FeaturePyramid(std::vector<FeatureMap> layers) : layers_(std::move(layers)) {
    check_geometry(layers_);
    for (std::size_t n = 0; n < layers_.size(); ++n) {
      if (!layers_[n].all_finite()) throw ValidationError("pyramid layer " + std::to_string(n) + " has non-finite values");
    }
  }

  struct Dims {
    std::size_t h, w, c;
  };

  // Throws ValidationError if the dims violate the depth ordering.
  static void check_dims(const std::vector<Dims>& dims) {
    if (dims.empty()) throw ValidationError("pyramid needs at least one layer");
    for (std::size_t n = 0; n < dims.size(); ++n) {
      if (dims[n].h == 0 || dims[n].w == 0 || dims[n].c == 0) {
        throw ValidationError("pyramid layer " + std::to_string(n) + " has a zero dimension");
      }
      if (n == 0) continue;
      const auto& a = dims[n - 1];
      const auto& b = dims[n];
      const bool grows = b.h > a.h || b.w > a.w;
      const bool same = b.h == a.h && b.w == a.w;
      if (grows || same) {
        throw ValidationError("pyramid resolution must decrease with depth: layer " + std::to_string(n - 1) + " is " +
                              std::to_string(a.h) + "x" + std::to_string(a.w) + ", layer " + std::to_string(n) +
                              " is " + std::to_string(b.h) + "x" + std::to_string(b.w));
      }
    }
  }

  std::size_t size() const noexcept { return layers_.size(); }
  const FeatureMap& operator[](std::size_t n) const noexcept { return layers_[n]; }
  const std::vector<FeatureMap>& layers() const noexcept { return layers_; }

  auto begin() const noexcept { return layers_.begin(); }
  auto end() const noexcept { return layers_.end(); }

  std::vector<Dims> dims() const {
    std::vector<Dims> out;
    for (const auto& x : layers_) out.push_back({x.h(), x.w(), x.c()});
    return out;
  }

  // Number of descriptors in all layers deeper than n.
  std::size_t deeper_cells(std::size_t n) const noexcept {
    std::size_t d = 0;
    for (std::size_t k = n + 1; k < layers_.size(); ++k) d += layers_[k].cells();
    return d;
  }

 private:
  static void check_geometry(const std::vector<FeatureMap>& layers) {
    std::vector<Dims> dims;
    for (const auto& x : layers) dims.push_back({x.h(), x.w(), x.c()});
    check_dims(dims);
  }

  std::vector<FeatureMap> layers_;
};

// Output of the fusion pass; layer n has the same shape as input layer n.
struct EnhancedPyramid {
  std::vector<FeatureMap> layers;

  friend bool operator==(const EnhancedPyramid&, const EnhancedPyramid&) = default;
};

}  // namespace featborrow
