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

// Dense double-precision tensors (rank 2 and rank 3) and the handful of
// kernels the borrowing blocks are built from.
//
// Feature maps are stored row-major as (h, w, c): the descriptor vector at
// spatial cell (i, j) is the contiguous c-length fiber starting at
// (i * w + j) * c. Flattening a map to a matrix keeps that order, so row
// r = i * w + j of the matrix is the descriptor at (i, j).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "featborrow/error.hpp"

namespace featborrow {

class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0) {
      throw ShapeError("matrix dimensions must be positive, got " + shape_string());
    }
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix " + shape_string() + " given " + std::to_string(data_.size()) + " values");
    }
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows)
      : Matrix(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size(), flatten(rows)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  static std::vector<double> flatten(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> out;
    const std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
    for (const auto& r : rows) {
      if (r.size() != cols) throw ShapeError("ragged matrix literal");
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

class FeatureMap {
 public:
  FeatureMap(std::size_t h, std::size_t w, std::size_t c)
      : FeatureMap(h, w, c, std::vector<double>(h * w * c, 0.0)) {}

  FeatureMap(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data)
      : h_(h), w_(w), c_(c), data_(std::move(data)) {
    if (h_ == 0 || w_ == 0 || c_ == 0) {
      throw ShapeError("feature map dimensions must be positive, got " + shape_string());
    }
    if (data_.size() != h_ * w_ * c_) {
      throw ShapeError("feature map " + shape_string() + " given " + std::to_string(data_.size()) + " values");
    }
  }

  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t c() const noexcept { return c_; }
  std::size_t cells() const noexcept { return h_ * w_; }

  double& at(std::size_t i, std::size_t j, std::size_t k) noexcept { return data_[(i * w_ + j) * c_ + k]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return data_[(i * w_ + j) * c_ + k]; }

  // Descriptor vector at (i, j).
  std::span<double> fiber(std::size_t i, std::size_t j) noexcept { return {data_.data() + (i * w_ + j) * c_, c_}; }
  std::span<const double> fiber(std::size_t i, std::size_t j) const noexcept {
    return {data_.data() + (i * w_ + j) * c_, c_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const FeatureMap& o) const noexcept { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  std::string shape_string() const {
    return std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t h_;
  std::size_t w_;
  std::size_t c_;
  std::vector<double> data_;
};

// 1x1 convolution: out_fiber = weight^T * in_fiber + bias.
struct ConvWeights1x1 {
  Matrix weight;  // c_in x c_out
  std::optional<std::vector<double>> bias;

  std::size_t c_in() const noexcept { return weight.rows(); }
  std::size_t c_out() const noexcept { return weight.cols(); }

  static ConvWeights1x1 zeros(std::size_t c_in, std::size_t c_out, bool with_bias = false) {
    ConvWeights1x1 w{Matrix(c_in, c_out), std::nullopt};
    if (with_bias) w.bias = std::vector<double>(c_out, 0.0);
    return w;
  }

  // Rectangular identity: channel k maps to channel k for k < min(c_in, c_out).
  static ConvWeights1x1 identity(std::size_t c_in, std::size_t c_out, bool with_bias = false) {
    ConvWeights1x1 w = zeros(c_in, c_out, with_bias);
    for (std::size_t k = 0; k < std::min(c_in, c_out); ++k) w.weight(k, k) = 1.0;
    return w;
  }

  void validate() const {
    if (bias && bias->size() != c_out()) {
      throw ShapeError("1x1 conv bias has " + std::to_string(bias->size()) + " entries, expected " +
                       std::to_string(c_out()));
    }
  }
};

// Transposed convolution with a 2x2 kernel and stride 2. Kernel layout is
// [a][b][c_in][c_out] for kernel offsets a (rows) and b (cols).
class DeconvWeights {
 public:
  static constexpr std::size_t kKernel = 2;
  static constexpr std::size_t kStride = 2;

  DeconvWeights(std::size_t c_in, std::size_t c_out)
      : DeconvWeights(c_in, c_out, std::vector<double>(kKernel * kKernel * c_in * c_out, 0.0)) {}

  DeconvWeights(std::size_t c_in, std::size_t c_out, std::vector<double> kernel)
      : c_in_(c_in), c_out_(c_out), kernel_(std::move(kernel)) {
    if (c_in_ == 0 || c_out_ == 0) throw ShapeError("deconv channel counts must be positive");
    if (kernel_.size() != kKernel * kKernel * c_in_ * c_out_) {
      throw ShapeError("deconv kernel needs " + std::to_string(kKernel * kKernel * c_in_ * c_out_) +
                       " values, got " + std::to_string(kernel_.size()));
    }
  }

  std::size_t c_in() const noexcept { return c_in_; }
  std::size_t c_out() const noexcept { return c_out_; }

  double& at(std::size_t a, std::size_t b, std::size_t ci, std::size_t co) noexcept {
    return kernel_[((a * kKernel + b) * c_in_ + ci) * c_out_ + co];
  }
  double at(std::size_t a, std::size_t b, std::size_t ci, std::size_t co) const noexcept {
    return kernel_[((a * kKernel + b) * c_in_ + ci) * c_out_ + co];
  }

  std::span<double> values() noexcept { return kernel_; }
  std::span<const double> values() const noexcept { return kernel_; }

  friend bool operator==(const DeconvWeights&, const DeconvWeights&) = default;

 private:
  std::size_t c_in_;
  std::size_t c_out_;
  std::vector<double> kernel_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

// a * b^T without materialising the transpose.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " x (" + b.shape_string() + ")^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

// Softmax along each row, with the row maximum subtracted first.
inline Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r);
    auto dst = out.row(r);
    const double peak = *std::max_element(src.begin(), src.end());
    double total = 0.0;
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] = std::exp(src[c] - peak);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

inline constexpr double kNormalizeEps = 1e-12;

inline double row_norm(std::span<const double> row) {
  double sq = 0.0;
  for (double v : row) sq += v * v;
  return std::sqrt(sq);
}

// Scales each row to unit Euclidean norm. Rows whose norm is below eps
// come back as zeros.
inline Matrix l2_normalize_rows(const Matrix& m, double eps = kNormalizeEps) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r);
    const double norm = row_norm(src);
    if (norm < eps) continue;
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / norm;
  }
  return out;
}

inline FeatureMap conv1x1(const FeatureMap& x, const ConvWeights1x1& w) {
  w.validate();
  if (x.c() != w.c_in()) {
    throw ShapeError("1x1 conv expects " + std::to_string(w.c_in()) + " input channels, map is " +
                     x.shape_string());
  }
  FeatureMap out(x.h(), x.w(), w.c_out());
  for (std::size_t i = 0; i < x.h(); ++i) {
    for (std::size_t j = 0; j < x.w(); ++j) {
      auto src = x.fiber(i, j);
      auto dst = out.fiber(i, j);
      if (w.bias) std::copy(w.bias->begin(), w.bias->end(), dst.begin());
      for (std::size_t k = 0; k < src.size(); ++k) {
        auto wk = w.weight.row(k);
        for (std::size_t o = 0; o < dst.size(); ++o) dst[o] += src[k] * wk[o];
      }
    }
  }
  return out;
}

// Offset of the crop window along one axis when a 2n-long upsampled axis
// is cut down to `target`. Odd excess leaves the extra cell at the end.
inline std::size_t deconv_crop_offset(std::size_t full, std::size_t target) noexcept {
  return (full - target) / 2;
}

// Stride-2, kernel-2 transposed convolution producing a (2h, 2w) map,
// center-cropped to (target_h, target_w).
inline FeatureMap transposed_conv(const FeatureMap& x, const DeconvWeights& w, std::size_t target_h,
                                  std::size_t target_w) {
  if (x.c() != w.c_in()) {
    throw ShapeError("deconv expects " + std::to_string(w.c_in()) + " input channels, map is " +
                     x.shape_string());
  }
  const std::size_t full_h = DeconvWeights::kStride * x.h();
  const std::size_t full_w = DeconvWeights::kStride * x.w();
  if (target_h < x.h() || target_h > full_h || target_w < x.w() || target_w > full_w) {
    std::ostringstream msg;
    msg << "deconv target " << target_h << "x" << target_w << " outside [" << x.h() << ", " << full_h
        << "] x [" << x.w() << ", " << full_w << "]";
    throw ShapeError(msg.str());
  }
  const std::size_t off_h = deconv_crop_offset(full_h, target_h);
  const std::size_t off_w = deconv_crop_offset(full_w, target_w);
  FeatureMap out(target_h, target_w, w.c_out());
  for (std::size_t oi = 0; oi < target_h; ++oi) {
    const std::size_t fi = oi + off_h;
    const std::size_t i = fi / 2, a = fi % 2;
    for (std::size_t oj = 0; oj < target_w; ++oj) {
      const std::size_t fj = oj + off_w;
      const std::size_t j = fj / 2, b = fj % 2;
      auto src = x.fiber(i, j);
      auto dst = out.fiber(oi, oj);
      for (std::size_t ci = 0; ci < src.size(); ++ci) {
        for (std::size_t co = 0; co < dst.size(); ++co) dst[co] += src[ci] * w.at(a, b, ci, co);
      }
    }
  }
  return out;
}

inline FeatureMap concat_channels(std::span<const FeatureMap> xs) {
  if (xs.empty()) throw ShapeError("concat_channels needs at least one map");
  std::size_t total = 0;
  for (const auto& x : xs) {
    if (x.h() != xs[0].h() || x.w() != xs[0].w()) {
      throw ShapeError("concat_channels spatial mismatch: " + xs[0].shape_string() + " vs " + x.shape_string());
    }
    total += x.c();
  }
  FeatureMap out(xs[0].h(), xs[0].w(), total);
  for (std::size_t i = 0; i < out.h(); ++i) {
    for (std::size_t j = 0; j < out.w(); ++j) {
      auto dst = out.fiber(i, j).begin();
      for (const auto& x : xs) {
        auto src = x.fiber(i, j);
        dst = std::copy(src.begin(), src.end(), dst);
      }
    }
  }
  return out;
}

inline FeatureMap concat_channels(std::initializer_list<FeatureMap> xs) {
  return concat_channels(std::span<const FeatureMap>(xs.begin(), xs.size()));
}

inline Matrix reshape_map_to_matrix(const FeatureMap& x) {
  return Matrix(x.cells(), x.c(), std::vector<double>(x.values().begin(), x.values().end()));
}

inline FeatureMap reshape_matrix_to_map(const Matrix& m, std::size_t h, std::size_t w) {
  if (m.rows() != h * w) {
    throw ShapeError("cannot reshape " + m.shape_string() + " matrix to " + std::to_string(h) + "x" +
                     std::to_string(w) + " cells");
  }
  return FeatureMap(h, w, m.cols(), std::vector<double>(m.values().begin(), m.values().end()));
}

}  // namespace featborrow
