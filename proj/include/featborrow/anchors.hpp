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

// Anchor design: the maximum-aspect-ratio rule, equal-proportion scale
// sets, anchor tiling, IoU, and Monte-Carlo coverage of object shapes.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "featborrow/detection_layers.hpp"
#include "featborrow/error.hpp"
#include "featborrow/rng.hpp"

namespace featborrow {

struct Box {
  double cx, cy, w, h;

  double area() const noexcept { return w * h; }
  double aspect_ratio() const noexcept { return w / h; }
};

// Box of side `size` (area size^2) with aspect ratio w/h = ar.
inline Box shaped_box(double cx, double cy, double size, double ar) {
  const double root = std::sqrt(ar);
  return Box{cx, cy, size * root, size / root};
}

inline double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2);
  const double ih = std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

// The three candidate factors of the maximum-AR rule at a given IoU:
// (2 / (1 + 1/iou))^2, iou / (2 - 2 iou), iou.
inline std::array<double, 3> max_anchor_ar_terms(double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw DomainError("IoU threshold must lie in (0, 1), got " + std::to_string(iou_threshold));
  }
  const double t = 2.0 / (1.0 + 1.0 / iou_threshold);
  return {t * t, iou_threshold / (2.0 - 2.0 * iou_threshold), iou_threshold};
}

// Largest anchor aspect ratio needed to cover objects whose orientation-
// normalised AR is at most mar_obj. Not clamped: small mar_obj can give a
// value below 1.
inline double max_anchor_ar(double mar_obj, double iou_threshold) {
  if (!(mar_obj >= 1.0)) throw DomainError("maximum object AR must be >= 1, got " + std::to_string(mar_obj));
  const auto terms = max_anchor_ar_terms(iou_threshold);
  return mar_obj * *std::max_element(terms.begin(), terms.end());
}

struct AnchorSpec {
  std::vector<double> sizes;         // first set, one per detection layer
  std::vector<double> second_sizes;  // interleaved set, aspect ratio 1 only
  std::vector<double> aspect_ratios;
  double image_size = kReferenceImageSize;

  void validate() const {
    if (sizes.empty()) throw ValidationError("anchor sizes: need at least one size");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (!(sizes[k] > 0.0)) throw ValidationError("anchor sizes: every size must be positive");
      if (k > 0 && !(sizes[k] > sizes[k - 1])) {
        throw ValidationError("anchor sizes: must be strictly increasing (" + std::to_string(sizes[k - 1]) +
                              " then " + std::to_string(sizes[k]) + ")");
      }
    }
    for (double s : second_sizes)
      if (!(s > 0.0)) throw ValidationError("anchor second_sizes: every size must be positive");
    if (aspect_ratios.empty()) throw ValidationError("anchor aspect_ratios: need at least one ratio");
    for (double a : aspect_ratios) {
      if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("anchor aspect_ratios: every ratio must be positive");
      const bool closed = std::any_of(aspect_ratios.begin(), aspect_ratios.end(),
                                      [a](double b) { return std::abs(a * b - 1.0) < 1e-9; });
      if (!closed) {
        throw ValidationError("anchor aspect_ratios: " + std::to_string(a) + " present without its reciprocal");
      }
    }
    if (!(image_size > 0.0)) throw ValidationError("anchor image_size must be positive");
  }

  // Sub-spec for detection layer k: its first-set size and, when present,
  // its second-set size.
  AnchorSpec layer(std::size_t k) const {
    if (k >= sizes.size()) throw ValidationError("anchor spec has no layer " + std::to_string(k));
    AnchorSpec out{{sizes[k]}, {}, aspect_ratios, image_size};
    if (k < second_sizes.size()) out.second_sizes.push_back(second_sizes[k]);
    return out;
  }
};

// Equal-proportion second set: S'_k = sqrt(S_k * S_{k+1}), the last one
// being the full image.
inline AnchorSpec design_scales(const std::vector<double>& base_sizes, double image_size,
                                const std::vector<double>& aspect_ratios = reference_aspect_ratios()) {
  if (base_sizes.size() < 2) throw ValidationError("anchor sizes: need at least two base sizes");
  AnchorSpec spec{base_sizes, {}, aspect_ratios, image_size};
  spec.validate();
  for (std::size_t k = 0; k + 1 < base_sizes.size(); ++k) {
    spec.second_sizes.push_back(std::sqrt(base_sizes[k] * base_sizes[k + 1]));
  }
  spec.second_sizes.push_back(image_size);
  return spec;
}

inline AnchorSpec reference_anchor_spec() {
  std::vector<double> sizes;
  for (const auto& l : reference_detection_layers()) sizes.push_back(l.anchor_size);
  return design_scales(sizes, kReferenceImageSize);
}

// Anchors tiled on a grid_h x grid_w layer, centred at ((j + .5) s, (i + .5) s).
// Per cell: every first-set size at every aspect ratio, then every
// second-set size at aspect ratio 1.
inline std::vector<Box> generate_anchors(const AnchorSpec& spec, std::size_t grid_h, std::size_t grid_w,
                                         double stride) {
  spec.validate();
  if (grid_h == 0 || grid_w == 0 || !(stride > 0.0)) {
    throw ValidationError("anchor grid and stride must be positive");
  }
  std::vector<Box> out;
  out.reserve(grid_h * grid_w * (spec.sizes.size() * spec.aspect_ratios.size() + spec.second_sizes.size()));
  for (std::size_t i = 0; i < grid_h; ++i) {
    for (std::size_t j = 0; j < grid_w; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * stride;
      const double cy = (static_cast<double>(i) + 0.5) * stride;
      for (double s : spec.sizes)
        for (double a : spec.aspect_ratios) out.push_back(shaped_box(cx, cy, s, a));
      for (double s : spec.second_sizes) out.push_back(shaped_box(cx, cy, s, 1.0));
    }
  }
  return out;
}

// IoU of two concentric equal-area boxes whose aspect ratios differ by a
// factor rho >= 1.
inline double equal_area_centered_iou(double rho) { return 1.0 / (2.0 * std::sqrt(rho) - 1.0); }

struct CenteredMatch {
  double iou = 0.0;
  double anchor_ar = 0.0;
  std::size_t index = 0;
};

// Best IoU of an object against concentric anchors of the given aspect
// ratios. With free_scale the anchor scale is optimised; the optimum is at
// equal area and is evaluated in closed form. Without it, object and anchor
// are fixed at equal area and compared as boxes. Both give the same value;
// the second route exists as a geometric cross-check. Ties go to the lower
// index.
inline CenteredMatch best_centered_iou(double object_ar, std::span<const double> anchor_ars, bool free_scale = true) {
  if (!(object_ar > 0.0)) throw DomainError("object aspect ratio must be positive");
  if (anchor_ars.empty()) throw DomainError("need at least one anchor aspect ratio");
  CenteredMatch best{-1.0, 0.0, 0};
  const Box object = shaped_box(0.0, 0.0, 1.0, object_ar);
  for (std::size_t k = 0; k < anchor_ars.size(); ++k) {
    const double a = anchor_ars[k];
    if (!(a > 0.0)) throw DomainError("anchor aspect ratios must be positive");
    const double value = free_scale ? equal_area_centered_iou(std::max(object_ar / a, a / object_ar))
                                    : iou(object, shaped_box(0.0, 0.0, 1.0, a));
    if (value > best.iou) best = {value, a, k};
  }
  return best;
}

struct Range {
  double lo, hi;
};

struct CoverageWorstCase {
  double object_ar = 0.0;
  std::optional<double> object_scale;  // empty for free-scale sweeps
  double best_iou = std::numeric_limits<double>::infinity();
};

struct CoverageReport {
  std::size_t samples = 0;
  std::size_t covered = 0;
  double fraction = 0.0;
  double iou_threshold = 0.0;
  bool free_scale = false;
  CoverageWorstCase worst_case;
};

inline constexpr const char* kCoverageModelNote =
    "translation-free model: each object is centred on its nearest anchor centre, so only shape (scale, "
    "aspect ratio) mismatch is measured";

inline constexpr std::size_t kCoveragePartition = 8192;

// Fraction of sampled object shapes whose best concentric anchor reaches
// the IoU threshold. AR and scale are log-uniform. Without a scale range
// the anchor scale is free and only the aspect-ratio set matters.
// Samples are drawn in fixed partitions with their own streams, so the
// report is identical for every thread count.
inline CoverageReport coverage_report(const AnchorSpec& spec, Range ar_range, std::optional<Range> scale_range,
                                      double iou_threshold, std::size_t samples, std::uint64_t seed,
                                      unsigned threads = 1) {
  spec.validate();
  if (samples == 0) throw ValidationError("coverage needs at least one sample");
  if (!(ar_range.lo > 0.0 && ar_range.hi >= ar_range.lo)) throw ValidationError("coverage: bad aspect-ratio range");
  if (scale_range && !(scale_range->lo > 0.0 && scale_range->hi >= scale_range->lo)) {
    throw ValidationError("coverage: bad scale range");
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ValidationError("coverage: IoU threshold outside (0, 1]");

  std::vector<Box> shapes;
  for (double s : spec.sizes)
    for (double a : spec.aspect_ratios) shapes.push_back(shaped_box(0.0, 0.0, s, a));
  for (double s : spec.second_sizes) shapes.push_back(shaped_box(0.0, 0.0, s, 1.0));

  struct Partial {
    std::size_t covered = 0;
    CoverageWorstCase worst;
  };
  const std::size_t partitions = (samples + kCoveragePartition - 1) / kCoveragePartition;
  std::vector<Partial> partial(partitions);

  auto log_uniform = [](SplitMix64& rng, Range r) {
    const double u = rng.uniform01();
    return r.lo == r.hi ? r.lo : r.lo * std::pow(r.hi / r.lo, u);
  };
  auto run_partition = [&](std::size_t part) {
    SplitMix64 rng(derive_seed(seed, part));
    Partial& acc = partial[part];
    const std::size_t begin = part * kCoveragePartition;
    const std::size_t end = std::min(samples, begin + kCoveragePartition);
    for (std::size_t s = begin; s < end; ++s) {
      const double ar = log_uniform(rng, ar_range);
      double best = 0.0;
      std::optional<double> scale;
      if (scale_range) {
        scale = log_uniform(rng, *scale_range);
        const Box object = shaped_box(0.0, 0.0, *scale, ar);
        for (const Box& a : shapes) best = std::max(best, iou(object, a));
      } else {
        best = best_centered_iou(ar, spec.aspect_ratios).iou;
      }
      if (best >= iou_threshold) ++acc.covered;
      if (best < acc.worst.best_iou) acc.worst = {ar, scale, best};
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || partitions == 1) {
    for (std::size_t part = 0; part < partitions; ++part) run_partition(part);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t part = t; part < partitions; part += threads) run_partition(part);
      });
    }
    for (auto& th : pool) th.join();
  }

  CoverageReport report;
  report.samples = samples;
  report.iou_threshold = iou_threshold;
  report.free_scale = !scale_range.has_value();
  for (const Partial& p : partial) {
    report.covered += p.covered;
    if (p.worst.best_iou < report.worst_case.best_iou) report.worst_case = p.worst;
  }
  report.fraction = static_cast<double>(report.covered) / static_cast<double>(samples);
  return report;
}

}  // namespace featborrow
