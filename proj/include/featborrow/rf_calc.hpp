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

// Accumulated stride ("jump") and theoretical receptive field along a chain
// of convolution / pooling layers.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "featborrow/detection_layers.hpp"
#include "featborrow/error.hpp"

namespace featborrow {

struct LayerGeom {
  std::string name;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool ceil_mode = false;  // pooling-style rounding of the output size
};

struct TraceEntry {
  std::string name;
  std::size_t jump;
  std::size_t receptive_field;
  std::optional<std::size_t> output_size;
};

struct ChainGeom {
  std::size_t stride = 1;
  std::size_t receptive_field = 1;
  std::vector<TraceEntry> trace;

  const TraceEntry* find(const std::string& name) const {
    for (const auto& e : trace)
      if (e.name == name) return &e;
    return nullptr;
  }
};

inline std::size_t conv_output_size(std::size_t in, const LayerGeom& l) {
  const std::size_t span = in + 2 * l.padding;
  if (span < l.kernel) {
    throw ValidationError("layer " + l.name + ": input " + std::to_string(in) + " too small for kernel " +
                          std::to_string(l.kernel));
  }
  std::size_t out = (span - l.kernel + (l.ceil_mode ? l.stride - 1 : 0)) / l.stride + 1;
  // A ceil-mode window must start inside the (left-padded) input.
  if (l.ceil_mode && (out - 1) * l.stride >= in + l.padding) --out;
  return out;
}

// rf += (kernel - 1) * jump; jump *= stride, starting from rf = jump = 1.
// Padding changes only the optional output sizes.
inline ChainGeom chain_geometry(const std::vector<LayerGeom>& layers, std::optional<std::size_t> input_size = {}) {
  if (layers.empty()) throw ValidationError("layer chain is empty");
  ChainGeom g;
  std::optional<std::size_t> size = input_size;
  for (const auto& l : layers) {
    if (l.kernel < 1 || l.stride < 1) {
      throw ValidationError("layer " + l.name + ": kernel and stride must be >= 1");
    }
    g.receptive_field += (l.kernel - 1) * g.stride;
    g.stride *= l.stride;
    if (size) size = conv_output_size(*size, l);
    g.trace.push_back({l.name, g.stride, g.receptive_field, size});
  }
  return g;
}

// VGG-16 through conv4_3/conv5_3, then pool5 (2x2, stride 2), conv_fc6
// (3x3), conv_fc7 (1x1), conv6_1 (1x1) and conv6_2 (3x3, stride 2). Pools
// round up so a 300 input gives 38/19/10/5 grids at the detection layers.
inline std::vector<LayerGeom> vgg16_ssd_chain() {
  std::vector<LayerGeom> chain;
  auto conv = [&](const char* name) { chain.push_back({name, 3, 1, 1, false}); };
  auto pool = [&](const char* name) { chain.push_back({name, 2, 2, 0, true}); };
  conv("conv1_1"), conv("conv1_2"), pool("pool1");
  conv("conv2_1"), conv("conv2_2"), pool("pool2");
  conv("conv3_1"), conv("conv3_2"), conv("conv3_3"), pool("pool3");
  conv("conv4_1"), conv("conv4_2"), conv("conv4_3"), pool("pool4");
  conv("conv5_1"), conv("conv5_2"), conv("conv5_3"), pool("pool5");
  conv("conv_fc6");
  chain.push_back({"conv_fc7", 1, 1, 0, false});
  chain.push_back({"conv6_1", 1, 1, 0, false});
  chain.push_back({"conv6_2", 3, 2, 1, false});
  return chain;
}

struct RfAuditRow {
  std::string name;
  std::size_t stride;
  std::size_t receptive_field;
  std::optional<std::size_t> output_size;
  int published_stride;
  int published_receptive_field;

  bool stride_matches() const { return static_cast<int>(stride) == published_stride; }
  int receptive_field_delta() const { return static_cast<int>(receptive_field) - published_receptive_field; }
};

// Compares a chain against the reference detection-layer table. Layers of
// the table missing from the chain are skipped.
inline std::vector<RfAuditRow> audit_against_reference(const ChainGeom& g) {
  std::vector<RfAuditRow> rows;
  for (const auto& ref : reference_detection_layers()) {
    const TraceEntry* e = g.find(ref.name);
    if (!e) continue;
    rows.push_back({ref.name, e->jump, e->receptive_field, e->output_size, ref.stride, ref.receptive_field});
  }
  return rows;
}

}  // namespace featborrow
