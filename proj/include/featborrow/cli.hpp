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

// Command-line front end. Exit status: 0 success, 1 validation / format /
// usage error, 2 numerical check failure.
//
// Requires CLI11 (CLI11.hpp on the include path) in addition to the
// library's own dependencies.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "featborrow/anchors.hpp"
#include "featborrow/autograd.hpp"
#include "featborrow/config.hpp"
#include "featborrow/error.hpp"
#include "featborrow/ffb.hpp"
#include "featborrow/fmb.hpp"
#include "featborrow/frb.hpp"
#include "featborrow/ingest.hpp"
#include "featborrow/init.hpp"
#include "featborrow/rf_calc.hpp"
#include "featborrow/tensor_file.hpp"

namespace featborrow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitCheckFailed = 2;

namespace cli_detail {

inline std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string join(const std::vector<double>& xs, int precision = 6) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? ", " : "") + num(xs[k], precision);
  return out;
}

struct Options {
  std::string config;
  std::string out;
  double eps = 1e-5;
  double tol = 1e-4;
  unsigned threads = 1;
  bool json = false;

  std::vector<double> sizes;
  std::vector<double> ars;
  double image_size = 0.0;

  double ar_min = 1.0 / 6.0;
  double ar_max = 6.0;
  double scale_min = 0.0;
  double scale_max = 0.0;
  double iou = 0.5;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  double min_fraction = -1.0;

  double mar_obj = 6.0;
  bool terms = false;

  std::string chain;
  std::string preset = "vgg16";
  std::size_t input_size = 0;

  std::string annotations;
  std::vector<double> percentiles;
  std::int64_t category = -1;
};

inline RunConfig load_config_or_default(const Options& o) {
  return o.config.empty() ? RunConfig{} : parse_config(o.config);
}

inline int cmd_forward(const Options& o, std::ostream& out) {
  RunConfig cfg = parse_config(o.config);
  if (!o.out.empty()) cfg.out = o.out;
  const auto& dims = cfg.require_pyramid();
  const FeaturePyramid p = synthetic_pyramid(dims, pyramid_seed(cfg));
  const BorrowNetParams params = make_params(dims, cfg.network, cfg.init, params_seed(cfg));
  const ForwardResult r = forward_pyramid(p, params);

  nlohmann::json summary;
  summary["seed"] = cfg.seed;
  summary["init"] = std::string(to_string(cfg.init));
  summary["parameters"] = param_count(params);
  out << "forward: " << p.size() << " layers, " << param_count(params) << " parameters, init "
      << to_string(cfg.init) << ", seed " << cfg.seed << "\n";
  if (r.warning) {
    out << "warning: " << *r.warning << "\n";
    summary["warning"] = *r.warning;
  }
  out << "layer  shape        max|Y-X|      matching   max|rowsum-1|\n";
  for (std::size_t n = 0; n < p.size(); ++n) {
    const auto x = p[n].values();
    const auto y = r.enhanced.layers[n].values();
    double delta = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) delta = std::max(delta, std::abs(y[k] - x[k]));
    nlohmann::json layer{{"shape", {p[n].h(), p[n].w(), p[n].c()}}, {"max_abs_update", delta}};
    std::string match = "-", dev = "-";
    if (n < r.matching.size()) {
      const Matrix& s = r.matching[n].values;
      double worst = 0.0;
      for (std::size_t row = 0; row < s.rows(); ++row) {
        double sum = 0.0;
        for (double v : s.row(row)) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
      match = s.shape_string();
      dev = num(worst, 3);
      layer["matching_shape"] = {s.rows(), s.cols()};
      layer["max_row_sum_deviation"] = worst;
    }
    summary["layers"].push_back(layer);
    out << pad(std::to_string(n), 7) << pad(p[n].shape_string(), 13) << pad(num(delta, 6), 14) << pad(match, 11)
        << dev << "\n";
  }
  if (cfg.out) {
    const std::filesystem::path dir = *cfg.out;
    std::filesystem::create_directories(dir);
    for (std::size_t n = 0; n < r.enhanced.layers.size(); ++n) {
      save_tensor((dir / ("Y_" + std::to_string(n) + ".pbt")).string(), to_tensor_file(r.enhanced.layers[n]));
    }
    for (std::size_t n = 0; n < r.matching.size(); ++n) {
      save_tensor((dir / ("S_" + std::to_string(n) + ".pbt")).string(), to_tensor_file(r.matching[n].values));
    }
    std::ofstream((dir / "summary.json").string()) << summary.dump(2) << "\n";
    out << "wrote " << r.enhanced.layers.size() << " Y and " << r.matching.size() << " S tensors to " << dir.string()
        << "\n";
  }
  return kExitOk;
}

inline int cmd_gradcheck(const Options& o, std::ostream& out) {
  const RunConfig cfg = parse_config(o.config);
  const auto& dims = cfg.require_pyramid();
  if (dims.size() < 2) throw ValidationError("gradcheck needs a pyramid with at least two layers");
  const FeaturePyramid p = synthetic_pyramid(dims, pyramid_seed(cfg));
  const BorrowNetParams params = make_params(dims, cfg.network, cfg.init, params_seed(cfg));
  const EnhancedPyramid target{synthetic_pyramid(dims, target_seed(cfg)).layers()};
  const GradCheckReport report = gradcheck(p, params, target, o.eps, o.tol, o.threads);
  if (o.json) {
    nlohmann::json j{{"eps", report.eps}, {"tol", report.tol}, {"passed", report.passed}};
    for (const auto& g : report.groups) {
      j["groups"].push_back({{"group", g.group}, {"max_relative_error", g.max_relative},
                             {"max_absolute_error", g.max_absolute}, {"entries", g.count}});
    }
    out << j.dump(2) << "\n";
  } else {
    out << "gradcheck: eps " << num(o.eps) << ", tol " << num(o.tol) << "\n";
    out << "group                       entries  max rel err   max abs err   status\n";
    for (const auto& g : report.groups) {
      out << pad(g.group, 28) << pad(std::to_string(g.count), 9) << pad(num(g.max_relative, 4), 14)
          << pad(num(g.max_absolute, 4), 14) << (g.max_relative < report.tol ? "ok" : "FAIL") << "\n";
    }
    out << (report.passed ? "PASS" : "FAIL") << "\n";
  }
  return report.passed ? kExitOk : kExitCheckFailed;
}

inline AnchorSpec anchor_spec_from(const Options& o) {
  AnchorSpec spec = load_config_or_default(o).anchors;
  const double image = o.image_size > 0.0 ? o.image_size : spec.image_size;
  if (!o.ars.empty()) spec.aspect_ratios = o.ars;
  if (!o.sizes.empty()) {
    spec = design_scales(o.sizes, image, spec.aspect_ratios);
  } else if (o.image_size > 0.0) {
    spec = design_scales(spec.sizes, image, spec.aspect_ratios);
  }
  spec.validate();
  return spec;
}

inline int cmd_anchors_design(const Options& o, std::ostream& out) {
  const AnchorSpec spec = anchor_spec_from(o);
  const double max_ar = *std::max_element(spec.aspect_ratios.begin(), spec.aspect_ratios.end());
  if (o.json) {
    nlohmann::json j{{"sizes", spec.sizes},
                     {"second_sizes", spec.second_sizes},
                     {"aspect_ratios", spec.aspect_ratios},
                     {"image_size", spec.image_size},
                     {"max_aspect_ratio", max_ar}};
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "anchor design: image " << num(spec.image_size) << ", aspect ratios {" << join(spec.aspect_ratios, 4)
      << "}\n";
  out << "layer  size        second size   anchors/cell\n";
  for (std::size_t k = 0; k < spec.sizes.size(); ++k) {
    const bool second = k < spec.second_sizes.size();
    out << pad(std::to_string(k), 7) << pad(num(spec.sizes[k]), 12)
        << pad(second ? num(spec.second_sizes[k]) : "-", 14)
        << spec.aspect_ratios.size() + (second ? 1 : 0) << "\n";
  }
  // max_anchor_ar is linear in mAR_obj, so the supported object AR is
  // max_ar divided by the factor at mAR_obj = 1.
  out << "largest anchor AR " << num(max_ar) << " supports object AR up to "
      << num(max_ar / max_anchor_ar(1.0, 0.5)) << " at IoU 0.5\n";
  return kExitOk;
}

inline int cmd_anchors_coverage(const Options& o, std::ostream& out) {
  const AnchorSpec spec = anchor_spec_from(o);
  std::optional<Range> scales;
  if (o.scale_min > 0.0 || o.scale_max > 0.0) {
    if (!(o.scale_min > 0.0 && o.scale_max >= o.scale_min)) {
      throw ValidationError("coverage: give both --scale-min and --scale-max with 0 < min <= max");
    }
    scales = Range{o.scale_min, o.scale_max};
  }
  const CoverageReport r =
      coverage_report(spec, {o.ar_min, o.ar_max}, scales, o.iou, o.samples, o.seed, o.threads);
  const bool ok = o.min_fraction < 0.0 || r.fraction >= o.min_fraction;
  if (o.json) {
    nlohmann::json worst{{"object_ar", r.worst_case.object_ar}, {"best_iou", r.worst_case.best_iou}};
    worst["object_scale"] = r.worst_case.object_scale ? nlohmann::json(*r.worst_case.object_scale) : nlohmann::json();
    nlohmann::json j{{"model", kCoverageModelNote}, {"samples", r.samples},     {"covered", r.covered},
                     {"fraction", r.fraction},      {"iou_threshold", r.iou_threshold},
                     {"free_scale", r.free_scale},  {"worst_case", worst}};
    out << j.dump(2) << "\n";
  } else {
    out << "# " << kCoverageModelNote << "\n";
    out << "# objects: AR log-uniform in [" << num(o.ar_min, 4) << ", " << num(o.ar_max, 4) << "], ";
    if (scales) {
      out << "scale log-uniform in [" << num(scales->lo) << ", " << num(scales->hi) << "]\n";
    } else {
      out << "anchor scale free (aspect-ratio sweep)\n";
    }
    out << "samples   " << r.samples << "\ncovered   " << r.covered << "\nfraction  " << num(r.fraction, 6)
        << " at IoU >= " << num(r.iou_threshold) << "\n";
    out << "worst     AR " << num(r.worst_case.object_ar, 5);
    if (r.worst_case.object_scale) out << ", scale " << num(*r.worst_case.object_scale, 5);
    out << ", best IoU " << num(r.worst_case.best_iou, 5) << "\n";
  }
  return ok ? kExitOk : kExitCheckFailed;
}

inline int cmd_maxar(const Options& o, std::ostream& out) {
  out << num(max_anchor_ar(o.mar_obj, o.iou), 15) << "\n";
  if (o.terms) {
    const auto t = max_anchor_ar_terms(o.iou);
    out << "terms " << num(t[0], 15) << " " << num(t[1], 15) << " " << num(t[2], 15) << "\n";
  }
  return kExitOk;
}

inline int cmd_rf(const Options& o, std::ostream& out) {
  ChainSpec chain;
  if (!o.chain.empty()) {
    chain = load_chain(o.chain);
  } else if (const RunConfig cfg = load_config_or_default(o); cfg.rf_chain) {
    chain = load_chain(*cfg.rf_chain);
  } else if (o.preset == "vgg16") {
    chain = {vgg16_ssd_chain(), 300};
  } else {
    throw ValidationError("rf: unknown preset \"" + o.preset + "\"");
  }
  if (o.input_size > 0) chain.input_size = o.input_size;
  const ChainGeom g = chain_geometry(chain.layers, chain.input_size);
  const auto audit = audit_against_reference(g);
  if (o.json) {
    nlohmann::json j{{"stride", g.stride}, {"receptive_field", g.receptive_field}};
    for (const auto& e : g.trace) {
      nlohmann::json row{{"name", e.name}, {"jump", e.jump}, {"receptive_field", e.receptive_field}};
      if (e.output_size) row["output_size"] = *e.output_size;
      j["trace"].push_back(row);
    }
    for (const auto& a : audit) {
      j["reference_audit"].push_back({{"name", a.name},
                                      {"stride", a.stride},
                                      {"published_stride", a.published_stride},
                                      {"receptive_field", a.receptive_field},
                                      {"published_receptive_field", a.published_receptive_field},
                                      {"receptive_field_delta", a.receptive_field_delta()}});
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "layer        jump   rf     size\n";
  for (const auto& e : g.trace) {
    out << pad(e.name, 13) << pad(std::to_string(e.jump), 7) << pad(std::to_string(e.receptive_field), 7)
        << (e.output_size ? std::to_string(*e.output_size) : "-") << "\n";
  }
  if (!audit.empty()) {
    out << "\nreference detection layers\nlayer        stride (pub)   rf (pub)      note\n";
    for (const auto& a : audit) {
      std::string note;
      if (!a.stride_matches()) note += "STRIDE MISMATCH ";
      if (a.receptive_field_delta() != 0) {
        note += "rf discrepancy " + std::string(a.receptive_field_delta() > 0 ? "+" : "") +
                std::to_string(a.receptive_field_delta()) + " vs published";
      }
      out << pad(a.name, 13) << pad(std::to_string(a.stride) + " (" + std::to_string(a.published_stride) + ")", 15)
          << pad(std::to_string(a.receptive_field) + " (" + std::to_string(a.published_receptive_field) + ")", 14)
          << (note.empty() ? "ok" : note) << "\n";
    }
  }
  return kExitOk;
}

inline int cmd_stats(const Options& o, std::ostream& out) {
  std::string path = o.annotations;
  if (path.empty()) {
    const RunConfig cfg = load_config_or_default(o);
    if (!cfg.annotations) throw ValidationError("stats: give --annotations or a config with \"annotations\"");
    path = *cfg.annotations;
  }
  std::optional<std::int64_t> category;
  if (o.category >= 0) category = o.category;
  const AnnotationSet set = load_annotations(path, category);
  const ArStats s = ar_stats(set, o.percentiles.empty() ? default_percentiles() : o.percentiles);
  if (o.json) {
    nlohmann::json j{{"count", s.count}, {"skipped", set.skipped}};
    for (const auto& [p, v] : s.percentiles) j["percentiles"].push_back({{"p", p}, {"aspect_ratio", v}});
    for (const auto& b : s.scale_histogram) j["scale_histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "objects " << s.count << " (skipped " << set.skipped << ")\n";
  out << "aspect ratio max(w/h, h/w), nearest-rank percentiles\n";
  for (const auto& [p, v] : s.percentiles) out << "  p" << pad(num(p), 6) << num(v) << "\n";
  out << "scale sqrt(w*h) histogram\n";
  for (const auto& b : s.scale_histogram) {
    out << "  [" << pad(num(b.lo, 5) + ", " + num(b.hi, 5) + ")", 22) << b.count << "\n";
  }
  return kExitOk;
}

// Small property fixtures covering each module; any failure exits 2.
inline int cmd_selfcheck(const Options& o, std::ostream& out) {
  std::vector<std::pair<std::string, std::function<bool()>>> checks;
  checks.emplace_back("max_anchor_ar(6, 0.5) == 3", [] { return max_anchor_ar(6.0, 0.5) == 3.0; });
  checks.emplace_back("matching rows are stochastic", [] {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::vector<FeaturePyramid::Dims> dims{{6, 6, 3}, {3, 3, 5}, {2, 2, 4}};
      const FeaturePyramid p = synthetic_pyramid(dims, seed);
      const BorrowNetParams params = make_params(dims, {}, InitMode::kSeededUniform, seed + 100);
      for (const auto& lp : params.layers) {
        const MatchingMatrix s = matching_matrix(p, lp.fmb);
        for (std::size_t r = 0; r < s.m(); ++r) {
          double sum = 0.0;
          for (double v : s.values.row(r)) {
            if (v < 0.0 || v > 1.0) return false;
            sum += v;
          }
          if (std::abs(sum - 1.0) > 1e-9) return false;
        }
      }
    }
    return true;
  });
  checks.emplace_back("zero combine weights leave the pyramid unchanged", [] {
    const std::vector<FeaturePyramid::Dims> dims{{8, 8, 4}, {4, 4, 6}, {2, 2, 8}};
    const FeaturePyramid p = synthetic_pyramid(dims, 3);
    BorrowNetParams params = make_params(dims, {}, InitMode::kSeededUniform, 4);
    for (auto& lp : params.layers) lp.ffb.w_combine = ConvWeights1x1::zeros(lp.ffb.w_combine.c_in(), lp.ffb.w_combine.c_out());
    return forward_pyramid(p, params).enhanced.layers == p.layers();
  });
  checks.emplace_back("gradients match central differences", [threads = o.threads] {
    const std::vector<FeaturePyramid::Dims> dims{{4, 4, 3}, {2, 2, 4}};
    const FeaturePyramid p = synthetic_pyramid(dims, 5);
    const BorrowNetParams params = make_params(dims, {}, InitMode::kSeededUniform, 6);
    const EnhancedPyramid target{synthetic_pyramid(dims, 7).layers()};
    return gradcheck(p, params, target, 1e-5, 1e-4, threads).passed;
  });
  checks.emplace_back("reference aspect ratios cover AR in [1/6, 6] at IoU 0.5", [threads = o.threads] {
    return coverage_report(reference_anchor_spec(), {1.0 / 6.0, 6.0}, std::nullopt, 0.5, 20000, 1, threads).fraction == 1.0;
  });
  checks.emplace_back("VGG-16 chain strides 8/16/32/64", [] {
    const auto audit = audit_against_reference(chain_geometry(vgg16_ssd_chain(), 300));
    return audit.size() == 4 && std::all_of(audit.begin(), audit.end(), [](const auto& a) { return a.stride_matches(); });
  });
  checks.emplace_back("tensor file round trip", [] {
    const TensorFile t{{2, 3, 1}, {1.0, -0.0, 1e-300, 3.5, -7.25, 0.1}};
    std::stringstream buf;
    write_tensor(buf, t);
    return read_tensor(buf) == t;
  });

  bool all = true;
  for (const auto& [name, check] : checks) {
    const bool ok = check();
    all = all && ok;
    out << (ok ? "PASS  " : "FAIL  ") << name << "\n";
  }
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace cli_detail

// Runs one subcommand. argv[0] is the program name.
inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using cli_detail::Options;
  Options o;
  CLI::App app{"Cross-layer feature borrowing kernels and anchor design tools", "featborrow"};
  app.require_subcommand(1);

  std::function<int()> action;

  auto* forward = app.add_subcommand("forward", "Run the borrowing network on a seeded synthetic pyramid");
  forward->add_option("--config", o.config, "Run config (JSON)")->required();
  forward->add_option("--out", o.out, "Directory for Y_n.pbt, S_n.pbt and summary.json");
  forward->callback([&] { action = [&] { return cli_detail::cmd_forward(o, out); }; });

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  grad->add_option("--config", o.config, "Run config (JSON)")->required();
  grad->add_option("--eps", o.eps, "Finite-difference step");
  grad->add_option("--tol", o.tol, "Maximum relative error per parameter group");
  grad->add_option("--threads", o.threads, "Worker threads for finite differences");
  grad->add_flag("--json", o.json, "Machine-readable report");
  grad->callback([&] { action = [&] { return cli_detail::cmd_gradcheck(o, out); }; });

  auto* anchors = app.add_subcommand("anchors", "Anchor scale design and coverage");
  anchors->require_subcommand(1);
  auto add_anchor_opts = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run config (JSON) supplying the anchor spec");
    sub->add_option("--sizes", o.sizes, "First-set anchor sizes, strictly increasing");
    sub->add_option("--ars", o.ars, "Anchor aspect ratios (closed under reciprocals)");
    sub->add_option("--image-size", o.image_size, "Input image size");
    sub->add_flag("--json", o.json, "Machine-readable report");
  };
  auto* design = anchors->add_subcommand("design", "Print first and second anchor sets");
  add_anchor_opts(design);
  design->callback([&] { action = [&] { return cli_detail::cmd_anchors_design(o, out); }; });
  auto* coverage = anchors->add_subcommand("coverage", "Monte-Carlo coverage of object shapes");
  add_anchor_opts(coverage);
  coverage->add_option("--ar-min", o.ar_min, "Smallest object AR (w/h)");
  coverage->add_option("--ar-max", o.ar_max, "Largest object AR (w/h)");
  coverage->add_option("--scale-min", o.scale_min, "Smallest object scale; omit both for a free-scale sweep");
  coverage->add_option("--scale-max", o.scale_max, "Largest object scale");
  coverage->add_option("--iou", o.iou, "IoU threshold");
  coverage->add_option("--samples", o.samples, "Number of sampled objects");
  coverage->add_option("--seed", o.seed, "Sampling seed");
  coverage->add_option("--threads", o.threads, "Worker threads");
  coverage->add_option("--min-fraction", o.min_fraction, "Exit 2 when coverage falls below this");
  coverage->callback([&] { action = [&] { return cli_detail::cmd_anchors_coverage(o, out); }; });

  auto* maxar = app.add_subcommand("maxar", "Maximum anchor aspect ratio for a given object AR bound");
  maxar->add_option("--mar-obj", o.mar_obj, "Largest object AR, >= 1");
  maxar->add_option("--iou", o.iou, "IoU threshold in (0, 1)");
  maxar->add_flag("--terms", o.terms, "Also print the three candidate factors");
  maxar->callback([&] { action = [&] { return cli_detail::cmd_maxar(o, out); }; });

  auto* rf = app.add_subcommand("rf", "Stride and receptive field along a layer chain");
  rf->add_option("--chain", o.chain, "Layer chain file (JSON)");
  rf->add_option("--config", o.config, "Run config whose rf_chain is used");
  rf->add_option("--preset", o.preset, "Built-in chain when no file is given")->check(CLI::IsMember({"vgg16"}));
  rf->add_option("--input-size", o.input_size, "Input resolution for output sizes");
  rf->add_flag("--json", o.json, "Machine-readable report");
  rf->callback([&] { action = [&] { return cli_detail::cmd_rf(o, out); }; });

  auto* stats = app.add_subcommand("stats", "Aspect-ratio and scale statistics of COCO-style annotations");
  stats->add_option("--annotations", o.annotations, "Annotation file");
  stats->add_option("--config", o.config, "Run config whose annotations path is used");
  stats->add_option("--percentiles", o.percentiles, "Percentiles in (0, 100]");
  stats->add_option("--category", o.category, "Only this category id");
  stats->add_flag("--json", o.json, "Machine-readable report");
  stats->callback([&] { action = [&] { return cli_detail::cmd_stats(o, out); }; });

  auto* self = app.add_subcommand("selfcheck", "Run the bundled property fixtures");
  self->add_option("--threads", o.threads, "Worker threads");
  self->callback([&] { action = [&] { return cli_detail::cmd_selfcheck(o, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  try {
    return action ? action() : kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitInvalid;
}

}  // namespace featborrow
