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

// Reverse-mode gradients of a squared-error surrogate loss with respect to
// every learnable tensor of the borrowing network, and a central-difference
// oracle to check them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "featborrow/error.hpp"
#include "featborrow/ffb.hpp"
#include "featborrow/fmb.hpp"
#include "featborrow/frb.hpp"
#include "featborrow/init.hpp"
#include "featborrow/pyramid.hpp"
#include "featborrow/tensor.hpp"

namespace featborrow {

// Same structure as the parameters; each tensor holds dLoss/dTensor.
struct ParamGradients {
  BorrowNetParams grad;
};

inline ParamGradients zero_gradients_like(const BorrowNetParams& params) {
  ParamGradients g{params};
  for_each_param_tensor(g.grad, [](std::string_view, std::size_t, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return g;
}

// 0.5 * sum over all layers and values of (y - target)^2.
inline double sq_loss(const EnhancedPyramid& y, const EnhancedPyramid& target) {
  if (y.layers.size() != target.layers.size()) {
    throw ShapeError("loss: pyramids have " + std::to_string(y.layers.size()) + " and " +
                     std::to_string(target.layers.size()) + " layers");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < y.layers.size(); ++n) {
    if (!y.layers[n].same_shape(target.layers[n])) {
      throw ShapeError("loss: layer " + std::to_string(n) + " is " + y.layers[n].shape_string() + " vs target " +
                       target.layers[n].shape_string());
    }
    const auto a = y.layers[n].values();
    const auto b = target.layers[n].values();
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = a[k] - b[k];
      total += 0.5 * diff * diff;
    }
  }
  return total;
}

namespace detail {

struct LayerTape {
  Matrix x;          // m x c_n, flattened input layer
  Matrix query;      // m x c_n, before normalisation
  Matrix keys;       // d x c_n, before normalisation
  Matrix query_unit;
  Matrix keys_unit;
  Matrix weights;    // softmax output, m x d
  Matrix values;     // d x c_common
  Matrix merged;     // m x (c_n + c_common + c_ctx)
};

// dL/dx for u = x / |x|, given dL/du. Rows guarded to zero in the forward
// pass get zero gradient.
inline Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& unit, const Matrix& d_unit,
                                         double eps = kNormalizeEps) {
  Matrix dx(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double norm = row_norm(x.row(r));
    if (norm < eps) continue;
    auto u = unit.row(r);
    auto du = d_unit.row(r);
    double proj = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) proj += u[k] * du[k];
    auto out = dx.row(r);
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = (du[k] - u[k] * proj) / norm;
  }
  return dx;
}

// dL/dS for P = row_softmax(S), as a Jacobian-vector product.
inline Matrix row_softmax_backward(const Matrix& p, const Matrix& dp) {
  Matrix ds(p.rows(), p.cols());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto pr = p.row(r);
    auto gr = dp.row(r);
    double dot = 0.0;
    for (std::size_t t = 0; t < pr.size(); ++t) dot += pr[t] * gr[t];
    auto out = ds.row(r);
    for (std::size_t t = 0; t < pr.size(); ++t) out[t] = pr[t] * (gr[t] - dot);
  }
  return ds;
}

inline Matrix transposed_matmul(const Matrix& a, const Matrix& b) { return matmul(transpose(a), b); }

inline void accumulate(std::span<double> dst, std::span<const double> src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

inline void accumulate_column_sums(std::vector<double>& dst, const Matrix& g) {
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto row = g.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) dst[c] += row[c];
  }
}

// Accumulates the gradient of a 1x1 conv applied to the rows of x, whose
// output gradient occupies rows [row0, row0 + x.rows()) of g.
inline void conv1x1_backward(const Matrix& x, const Matrix& g, std::size_t row0, ConvWeights1x1& grad) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto gr = g.row(row0 + r);
    for (std::size_t i = 0; i < xr.size(); ++i) {
      auto dw = grad.weight.row(i);
      for (std::size_t o = 0; o < gr.size(); ++o) dw[o] += xr[i] * gr[o];
    }
    if (grad.bias) {
      for (std::size_t o = 0; o < gr.size(); ++o) (*grad.bias)[o] += gr[o];
    }
  }
}

// Gradients of the cropped stride-2 transposed conv: accumulates the kernel
// gradient into `dkernel` and the input gradient into `dinput`.
inline void transposed_conv_backward(const FeatureMap& input, const DeconvWeights& w, const FeatureMap& dout,
                                     DeconvWeights& dkernel, FeatureMap& dinput) {
  const std::size_t off_h = deconv_crop_offset(2 * input.h(), dout.h());
  const std::size_t off_w = deconv_crop_offset(2 * input.w(), dout.w());
  for (std::size_t oi = 0; oi < dout.h(); ++oi) {
    const std::size_t fi = oi + off_h;
    const std::size_t i = fi / 2, a = fi % 2;
    for (std::size_t oj = 0; oj < dout.w(); ++oj) {
      const std::size_t fj = oj + off_w;
      const std::size_t j = fj / 2, b = fj % 2;
      auto g = dout.fiber(oi, oj);
      auto x = input.fiber(i, j);
      auto dx = dinput.fiber(i, j);
      for (std::size_t ci = 0; ci < x.size(); ++ci) {
        double acc = 0.0;
        for (std::size_t co = 0; co < g.size(); ++co) {
          dkernel.at(a, b, ci, co) += x[ci] * g[co];
          acc += w.at(a, b, ci, co) * g[co];
        }
        dx[ci] += acc;
      }
    }
  }
}

}  // namespace detail

struct BackwardResult {
  double loss = 0.0;
  ParamGradients gradients;
};

inline BackwardResult backward(const FeaturePyramid& p, const BorrowNetParams& params,
                               const EnhancedPyramid& target) {
  params.validate(p);
  const std::size_t depth = p.size();
  BackwardResult out{0.0, zero_gradients_like(params)};

  // Forward pass, keeping what the backward pass needs.
  std::vector<FeatureMap> y(p.begin(), p.end());
  std::vector<std::optional<detail::LayerTape>> tape(depth);
  for (std::size_t n = depth - 1; n-- > 0;) {
    const LayerParams& lp = params.layers[n];
    const FeatureMap& x = p[n];
    Matrix query = embed_query(p, lp.fmb);
    Matrix keys = embed_and_stack_keys(p, lp.fmb);
    Matrix query_unit = l2_normalize_rows(query);
    Matrix keys_unit = l2_normalize_rows(keys);
    Matrix weights = row_softmax(matmul_transposed(query_unit, keys_unit));
    Matrix values = encapsulate_and_stack(p, lp.frb);
    const MatchingMatrix s{weights};
    const BorrowedMap z = borrow(s, values, x.h(), x.w());
    const FeatureMap ctx = context_deconv(y[n + 1], lp.ffb, x.h(), x.w());
    const FeatureMap merged = concat_channels({x, z.z, ctx});
    y[n] = fuse_layer(x, z, ctx, lp.ffb);
    tape[n] = detail::LayerTape{reshape_map_to_matrix(x), std::move(query), std::move(keys),
                                std::move(query_unit), std::move(keys_unit), std::move(weights),
                                std::move(values), reshape_map_to_matrix(merged)};
  }
  const EnhancedPyramid enhanced{y};
  out.loss = sq_loss(enhanced, target);

  // Upstream gradients dL/dY_n, starting from the direct loss term.
  std::vector<FeatureMap> grad_y;
  for (std::size_t n = 0; n < depth; ++n) {
    FeatureMap g = y[n];
    auto gv = g.values();
    auto tv = target.layers[n].values();
    for (std::size_t k = 0; k < gv.size(); ++k) gv[k] -= tv[k];
    grad_y.push_back(std::move(g));
  }

  // Y_n feeds Y_{n-1} through the context path only, so walking shallow to
  // deep sees every contribution to dL/dY_n before it is consumed.
  for (std::size_t n = 0; n + 1 < depth; ++n) {
    const LayerParams& lp = params.layers[n];
    LayerParams& gp = out.gradients.grad.layers[n];
    const detail::LayerTape& t = *tape[n];
    const FeatureMap& x = p[n];
    const std::size_t c_n = x.c();
    const std::size_t c_common = lp.frb.c_common;
    const std::size_t c_ctx = lp.ffb.c_ctx;

    const Matrix g = reshape_map_to_matrix(grad_y[n]);
    detail::conv1x1_backward(t.merged, g, 0, gp.ffb.w_combine);

    const Matrix d_merged = matmul_transposed(g, lp.ffb.w_combine.weight);
    Matrix d_z(t.merged.rows(), c_common);
    FeatureMap d_ctx(x.h(), x.w(), c_ctx);
    for (std::size_t r = 0; r < d_merged.rows(); ++r) {
      auto src = d_merged.row(r);
      std::copy(src.begin() + c_n, src.begin() + c_n + c_common, d_z.row(r).begin());
      std::copy(src.begin() + c_n + c_common, src.end(), d_ctx.values().begin() + r * c_ctx);
    }

    detail::transposed_conv_backward(y[n + 1], lp.ffb.w_deconv, d_ctx, gp.ffb.w_deconv, grad_y[n + 1]);

    const Matrix d_weights = matmul_transposed(d_z, t.values);
    const Matrix d_values = detail::transposed_matmul(t.weights, d_z);
    const Matrix d_sim = detail::row_softmax_backward(t.weights, d_weights);
    const Matrix d_query_unit = matmul(d_sim, t.keys_unit);
    const Matrix d_keys_unit = detail::transposed_matmul(d_sim, t.query_unit);
    const Matrix d_query = detail::l2_normalize_rows_backward(t.query, t.query_unit, d_query_unit);
    const Matrix d_keys = detail::l2_normalize_rows_backward(t.keys, t.keys_unit, d_keys_unit);

    detail::conv1x1_backward(t.x, d_query, 0, gp.fmb.w_query);
    std::size_t row0 = 0;
    for (std::size_t k = 0; k < lp.fmb.w_keys.size(); ++k) {
      const Matrix xk = reshape_map_to_matrix(p[n + 1 + k]);
      detail::conv1x1_backward(xk, d_keys, row0, gp.fmb.w_keys[k]);
      detail::conv1x1_backward(xk, d_values, row0, gp.frb.w_values[k]);
      row0 += xk.rows();
    }
  }
  return out;
}

// Central difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

// Central-difference estimate of every parameter gradient, one pair of
// forward passes per scalar. Each scalar is owned by exactly one worker,
// so the result does not depend on the thread count.
inline ParamGradients finite_difference(const FeaturePyramid& p, const BorrowNetParams& params,
                                        const EnhancedPyramid& target, double eps, unsigned threads = 1) {
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  params.validate(p);
  ParamGradients out = zero_gradients_like(params);

  auto tensors_of = [](auto& ps) {
    std::vector<std::span<double>> spans;
    for_each_param_tensor(ps, [&](std::string_view, std::size_t, std::span<double> v) { spans.push_back(v); });
    return spans;
  };
  const std::vector<std::span<double>> grad_tensors = tensors_of(out.grad);
  std::vector<std::pair<std::size_t, std::size_t>> scalars;
  for (std::size_t t = 0; t < grad_tensors.size(); ++t)
    for (std::size_t k = 0; k < grad_tensors[t].size(); ++k) scalars.emplace_back(t, k);

  auto work = [&](std::size_t begin, std::size_t end) {
    BorrowNetParams probe = params;
    const std::vector<std::span<double>> probe_tensors = tensors_of(probe);
    for (std::size_t s = begin; s < end; ++s) {
      const auto [t, k] = scalars[s];
      double& theta = probe_tensors[t][k];
      const double saved = theta;
      const auto loss_at = [&](double value) {
        theta = value;
        return sq_loss(forward_pyramid(p, probe).enhanced, target);
      };
      grad_tensors[t][k] = central_difference(loss_at, saved, eps);
      theta = saved;
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || scalars.size() < 2) {
    work(0, scalars.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (scalars.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < scalars.size(); begin += chunk) {
    pool.emplace_back(work, begin, std::min(scalars.size(), begin + chunk));
  }
  for (auto& th : pool) th.join();
  return out;
}

inline constexpr double kRelativeErrorFloor = 1e-8;

struct GroupError {
  std::string group;
  double max_relative = 0.0;
  double max_absolute = 0.0;
  std::size_t count = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double eps = 0.0;
  double tol = 0.0;
  bool passed = false;

  std::vector<std::string> failing_groups() const {
    std::vector<std::string> out;
    for (const auto& g : groups)
      if (!(g.max_relative < tol)) out.push_back(g.group);
    return out;
  }
};

// Per-entry relative error |a - n| / max(floor, |a| + |n|), maximised
// within each parameter group.
inline GradCheckReport compare_gradients(const ParamGradients& analytic, const ParamGradients& numeric, double eps,
                                         double tol) {
  std::vector<std::pair<std::string_view, std::span<const double>>> a_tensors;
  for_each_param_tensor(analytic.grad, [&](std::string_view name, std::size_t, std::span<const double> v) {
    a_tensors.emplace_back(name, v);
  });
  std::size_t idx = 0;
  GradCheckReport report;
  report.eps = eps;
  report.tol = tol;
  for_each_param_tensor(numeric.grad, [&](std::string_view name, std::size_t, std::span<const double> v) {
    if (idx >= a_tensors.size() || a_tensors[idx].first != name || a_tensors[idx].second.size() != v.size()) {
      throw ShapeError("gradient structures differ at tensor " + std::to_string(idx));
    }
    const auto a = a_tensors[idx++].second;
    auto it = std::find_if(report.groups.begin(), report.groups.end(),
                           [&](const GroupError& g) { return g.group == name; });
    if (it == report.groups.end()) {
      report.groups.push_back(GroupError{std::string(name)});
      it = report.groups.end() - 1;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double diff = std::abs(a[k] - v[k]);
      const double rel = diff / std::max(kRelativeErrorFloor, std::abs(a[k]) + std::abs(v[k]));
      it->max_absolute = std::max(it->max_absolute, diff);
      it->max_relative = std::max(it->max_relative, rel);
      ++it->count;
    }
  });
  report.passed = report.failing_groups().empty();
  return report;
}

inline GradCheckReport gradcheck(const FeaturePyramid& p, const BorrowNetParams& params,
                                 const EnhancedPyramid& target, double eps, double tol, unsigned threads = 1) {
  if (!(eps > 0.0) || !(tol > 0.0)) throw DomainError("gradcheck needs positive eps and tol");
  const BackwardResult analytic = backward(p, params, target);
  const ParamGradients numeric = finite_difference(p, params, target, eps, threads);
  return compare_gradients(analytic.gradients, numeric, eps, tol);
}

}  // namespace featborrow
