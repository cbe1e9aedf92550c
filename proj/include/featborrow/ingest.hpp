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

// COCO-style annotation loading and object aspect-ratio / scale statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "featborrow/error.hpp"

namespace featborrow {

struct AnnotatedObject {
  std::int64_t image_id = -1;
  std::int64_t category_id = -1;
  double width = 0.0;
  double height = 0.0;
};

struct AnnotationSet {
  std::vector<AnnotatedObject> objects;
  std::size_t skipped = 0;  // malformed or degenerate entries
};

// Reads "annotations"[*]."bbox" = [x, y, w, h] plus the image and category
// ids. Entries without a usable bbox or with w <= 0 or h <= 0 are skipped
// and counted. With a category filter, other categories are ignored (not
// counted as skipped).
inline AnnotationSet parse_annotations(const nlohmann::json& doc, std::optional<std::int64_t> category = {}) {
  if (!doc.is_object() || !doc.contains("annotations")) {
    throw FormatError("annotation file has no \"annotations\" key");
  }
  const auto& anns = doc.at("annotations");
  if (!anns.is_array()) throw FormatError("\"annotations\" is not an array");
  AnnotationSet out;
  for (const auto& a : anns) {
    if (!a.is_object() || !a.contains("bbox")) {
      ++out.skipped;
      continue;
    }
    AnnotatedObject obj;
    if (a.contains("category_id") && a["category_id"].is_number_integer()) obj.category_id = a["category_id"].get<std::int64_t>();
    if (category && obj.category_id != *category) continue;
    if (a.contains("image_id") && a["image_id"].is_number_integer()) obj.image_id = a["image_id"].get<std::int64_t>();
    const auto& bbox = a["bbox"];
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const auto& v) { return v.is_number(); })) {
      ++out.skipped;
      continue;
    }
    obj.width = bbox[2].get<double>();
    obj.height = bbox[3].get<double>();
    if (!(obj.width > 0.0) || !(obj.height > 0.0) || !std::isfinite(obj.width) || !std::isfinite(obj.height)) {
      ++out.skipped;
      continue;
    }
    out.objects.push_back(obj);
  }
  return out;
}

inline AnnotationSet load_annotations(const std::string& path, std::optional<std::int64_t> category = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read annotation file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return parse_annotations(doc, category);
}

// max(w/h, h/w) >= 1.
inline double normalized_aspect_ratio(double w, double h) { return std::max(w / h, h / w); }

// Nearest-rank percentile of ascending data: the ceil(p/100 * n)-th value.
inline double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DomainError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw DomainError("percentile must lie in (0, 100], got " + std::to_string(p));
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

struct ScaleBin {
  double lo, hi;
  std::size_t count;
};

struct ArStats {
  std::size_t count = 0;
  std::vector<std::pair<double, double>> percentiles;  // (p, AR), p ascending
  std::vector<ScaleBin> scale_histogram;               // sqrt(w*h), bins grow by sqrt(2)
};

inline const std::vector<double>& default_percentiles() {
  static const std::vector<double> ps{50.0, 90.0, 95.0, 99.0, 100.0};
  return ps;
}

inline ArStats ar_stats(const AnnotationSet& set, std::vector<double> percentiles = default_percentiles()) {
  if (set.objects.empty()) throw DomainError("no objects to summarise");
  std::vector<double> ars, scales;
  for (const auto& o : set.objects) {
    ars.push_back(normalized_aspect_ratio(o.width, o.height));
    scales.push_back(std::sqrt(o.width * o.height));
  }
  std::sort(ars.begin(), ars.end());
  std::sort(scales.begin(), scales.end());
  std::sort(percentiles.begin(), percentiles.end());
  percentiles.erase(std::unique(percentiles.begin(), percentiles.end()), percentiles.end());

  ArStats out;
  out.count = ars.size();
  for (double p : percentiles) out.percentiles.emplace_back(p, nearest_rank(ars, p));

  // Edges s_min * sqrt(2)^k, built by repeated multiplication so bin
  // membership does not depend on log rounding.
  std::vector<double> edges{scales.front()};
  while (edges.back() <= scales.back()) edges.push_back(edges.back() * std::sqrt(2.0));
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) out.scale_histogram.push_back({edges[k], edges[k + 1], 0});
  for (double s : scales) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), s);
    ++out.scale_histogram[static_cast<std::size_t>(it - edges.begin()) - 1].count;
  }
  return out;
}

}  // namespace featborrow
