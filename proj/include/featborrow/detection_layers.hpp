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

#include <string>
#include <vector>

namespace featborrow {

// One SSD detection layer of the reference configuration: VGG-16 conv4_3,
// conv5_3, conv_fc7 and conv6_2 on a 300x300 input.
struct DetectionLayer {
  std::string name;
  int stride;
  int receptive_field;  // as published; see rf_calc for the recomputed value
  double anchor_size;
  std::vector<double> aspect_ratios;
};

inline const std::vector<double>& reference_aspect_ratios() {
  static const std::vector<double> ars{1.0, 3.0 / 2.0, 3.0, 2.0 / 3.0, 1.0 / 3.0};
  return ars;
}

inline const std::vector<DetectionLayer>& reference_detection_layers() {
  static const std::vector<DetectionLayer> layers{
      {"conv4_3", 8, 108, 32.0, reference_aspect_ratios()},
      {"conv5_3", 16, 228, 64.0, reference_aspect_ratios()},
      {"conv_fc7", 32, 340, 128.0, reference_aspect_ratios()},
      {"conv6_2", 64, 468, 256.0, {1.0, 3.0 / 2.0, 2.0 / 3.0}},
  };
  return layers;
}

inline constexpr double kReferenceImageSize = 300.0;

}  // namespace featborrow
